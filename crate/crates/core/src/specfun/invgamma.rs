use rand::Rng;
use rand_distr::StandardNormal;

use super::gamma::ln_gamma;
use super::rng::RngStream;
use crate::error::{domain, Result};

/// Marsaglia–Tsang squeeze/rejection sampler for `Gamma(a, 1)`, `a ≥ 1`.
fn marsaglia_tsang(a: f64, rng: &mut RngStream) -> f64 {
    let d = a - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.open_uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// `Gamma(a, 1)` variate; shapes below 1 use `G_a = G_{a+1} U^{1/a}`.
pub fn sample_gamma(a: f64, rng: &mut RngStream) -> f64 {
    if a >= 1.0 {
        marsaglia_tsang(a, rng)
    } else {
        sample_log_gamma(a, rng).exp()
    }
}

/// Logarithm of a `Gamma(a, 1)` variate, accurate for tiny shapes where the
/// variate itself underflows.
pub fn sample_log_gamma(a: f64, rng: &mut RngStream) -> f64 {
    if a >= 1.0 {
        marsaglia_tsang(a, rng).ln()
    } else {
        let (core, log_u) = sample_log_gamma_split(a, rng);
        core + log_u / a
    }
}

/// Always-boosted representation `log G_a = log G_{a+1} + (log U)/a`,
/// returned as `(log G_{a+1}, log U)`. The uniform is exposed so that other
/// variates can be coupled to it.
pub fn sample_log_gamma_split(a: f64, rng: &mut RngStream) -> (f64, f64) {
    let core = marsaglia_tsang(a + 1.0, rng).ln();
    (core, rng.open_uniform().ln())
}

/// Inverse-gamma variate `1/G`, `G ∼ Gamma(θ, 1)`.
pub fn sample_inverse_gamma(theta: f64, rng: &mut RngStream) -> f64 {
    1.0 / sample_gamma(theta, rng)
}

/// Logarithm of an inverse-gamma variate.
pub fn sample_log_inverse_gamma(theta: f64, rng: &mut RngStream) -> f64 {
    -sample_log_gamma(theta, rng)
}

/// Log-density `-log Γ(θ) - (θ+1) log x - 1/x` w.r.t. Lebesgue measure.
pub fn inverse_gamma_logpdf(x: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !(x > 0.0) {
        return Err(domain(format!("inverse-gamma log-density at x={x}, θ={theta}")));
    }
    Ok(-ln_gamma(theta) - (theta + 1.0) * x.ln() - 1.0 / x)
}

/// `P(X ≤ x) = Q(θ, 1/x)` (upper regularized incomplete gamma).
pub fn inverse_gamma_cdf(x: f64, theta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_ur(theta, 1.0 / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{digamma, stats::ks_test, trigamma};

    #[test]
    fn log_moments() {
        let theta = 1.7;
        let mut rng = RngStream::new(1, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_log_inverse_gamma(theta, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean + digamma(theta).unwrap()).abs() < 4.0 * se);
        let t1 = trigamma(theta).unwrap();
        // Fourth central moment of log G is Ψ₃ + 3Ψ₁²; bound its SE crudely.
        assert!((var - t1).abs() < 4.0 * (3.0 * t1 * t1 * 2.0 / n as f64).sqrt() * 2.0);
    }

    #[test]
    fn small_shapes_pass_ks() {
        for &a in &[0.3, 0.7] {
            let mut rng = RngStream::new(2, (a * 10.0) as u64);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_inverse_gamma(a, &mut rng)).collect();
            let r = ks_test(&xs, |x| inverse_gamma_cdf(x, a)).unwrap();
            assert!(r.p_value > 0.01, "a={a}: {r:?}");
        }
    }

    #[test]
    fn density_normalizes() {
        // ∫ pdf dx in log variables x = e^t.
        for &theta in &[0.4, 1.0, 3.5] {
            let h = 0.01;
            let s: f64 = (-4000..12000)
                .map(|k| {
                    let t = k as f64 * h;
                    (inverse_gamma_logpdf(t.exp(), theta).unwrap() + t).exp()
                })
                .sum::<f64>()
                * h;
            assert!((s - 1.0).abs() < 1e-10, "θ={theta}: {s}");
        }
    }

    #[test]
    fn moment_finiteness_threshold() {
        // E[d^p] = Γ(θ-p)/Γ(θ) is finite exactly for p < θ.
        let theta = 0.8;
        for &p in &[0.2, 0.5, 0.65] {
            let h = 0.005;
            let s: f64 = (-8000..20000)
                .map(|k| {
                    let t = k as f64 * h;
                    (inverse_gamma_logpdf(t.exp(), theta).unwrap() + t + p * t).exp()
                })
                .sum::<f64>()
                * h;
            let want = (ln_gamma(theta - p) - ln_gamma(theta)).exp();
            assert!((s / want - 1.0).abs() < 1e-3, "p={p}");
        }
        assert!(inverse_gamma_logpdf(1.0, -1.0).is_err());
    }
}
