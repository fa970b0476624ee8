//! Monte Carlo bookkeeping and deterministic parallel replication.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::specfun::rng::{tag, RngStream};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_error: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, std_error: (var / n as f64).sqrt(), n }
    }

    /// Sample variance recovered from the standard error.
    pub fn variance(&self) -> f64 {
        self.std_error * self.std_error * self.n as f64
    }

    /// `(mean - target) / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Complex mean with componentwise standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn from_samples(zs: &[Complex64]) -> ComplexEstimate {
        let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
        ComplexEstimate { re: Estimate::from_samples(&re), im: Estimate::from_samples(&im) }
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    pub fn std_error(&self) -> f64 {
        self.re.std_error.hypot(self.im.std_error)
    }
}

/// Ratio estimate `Σ a / Σ b` with a delta-method standard error, as used
/// by self-normalized importance sampling.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let ma = num.iter().sum::<f64>() / n as f64;
    let mb = den.iter().sum::<f64>() / n as f64;
    let r = ma / mb;
    let var = num.iter().zip(den).map(|(a, b)| (a - r * b).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    Estimate { mean: r, std_error: (var / n as f64).sqrt() / mb.abs(), n }
}

/// Kish effective sample size of a set of non-negative weights.
pub fn effective_sample_size(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2
}

/// Runs `f` once per replica on its own stream `(seed, label, replica)`.
/// Results come back in replica order whatever the thread count, so any
/// sequential reduction of them is reproducible.
pub fn replicate<T, F>(seed: u64, label: &str, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    let t = tag(label);
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::tagged(seed, t, i as u64);
            f(&mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replication_is_thread_independent() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| replicate(9, "t", 1000, |r| r.open_uniform()))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn estimate_of_constant_and_ratio() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
        let r = ratio_estimate(&[2.0, 4.0], &[1.0, 2.0]);
        assert!((r.mean - 2.0).abs() < 1e-15 && r.std_error < 1e-15);
        assert!((effective_sample_size(&[1.0; 8]) - 8.0).abs() < 1e-12);
    }
}
