//! Goodness-of-fit and dependence statistics used by the distributional
//! checks.

use serde::Serialize;

use crate::error::{contract, Result};

/// Statistic and p-value of a Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn p_from_d(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test against a continuous cdf, asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = samples.len();
    if n < 100 {
        return Err(contract(format!("KS test needs at least 100 samples, got {n}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    Ok(KsResult { statistic: d, p_value: p_from_d(d, nf), n })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 100 || b.len() < 100 {
        return Err(contract("two-sample KS test needs at least 100 samples per side"));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: p_from_d(d, n_eff), n: a.len() + b.len() })
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(df / 2.0, stat / 2.0)
}

/// Pearson chi-square goodness of fit; bins with expected count below 5 are
/// pooled into one. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != expected.len() {
        return Err(contract("observed/expected length mismatch"));
    }
    let mut stat = 0.0;
    let mut bins = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        if *e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            stat += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        bins += 1;
    }
    if bins < 2 {
        return Err(contract("chi-square test needs at least two usable bins"));
    }
    let df = bins - 1;
    Ok((stat, df, chi_square_sf(stat, df as f64)))
}

/// Jarque–Bera normality statistic and its asymptotic p-value.
pub fn jarque_bera(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    (jb, (-jb / 2.0).exp())
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Ranks `0..n` (ties broken by position; inputs here are continuous).
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

/// Spearman rank correlation; finite for heavy-tailed samples.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// Chi-square independence test on the `bins × bins` histogram of rank
/// pairs. Returns `(statistic, df, p-value)`.
pub fn rank_independence(a: &[f64], b: &[f64], bins: usize) -> Result<(f64, usize, f64)> {
    let n = a.len();
    if n != b.len() || n < bins * bins * 5 {
        return Err(contract("rank histogram needs ≥ 5 expected counts per cell"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let mut counts = vec![0.0; bins * bins];
    let nf = n as f64;
    for (x, y) in ra.iter().zip(&rb) {
        let i = ((x / nf) * bins as f64) as usize;
        let j = ((y / nf) * bins as f64) as usize;
        counts[i.min(bins - 1) * bins + j.min(bins - 1)] += 1.0;
    }
    let mut row = vec![0.0; bins];
    let mut col = vec![0.0; bins];
    for i in 0..bins {
        for j in 0..bins {
            row[i] += counts[i * bins + j];
            col[j] += counts[i * bins + j];
        }
    }
    let mut stat = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let e = row[i] * col[j] / nf;
            stat += (counts[i * bins + j] - e).powi(2) / e;
        }
    }
    let df = (bins - 1) * (bins - 1);
    Ok((stat, df, chi_square_sf(stat, df as f64)))
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::rng::RngStream;
    use rand::Rng;

    fn uniforms(seed: u64, n: usize) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn uniform_sample_accepted() {
        let xs = uniforms(3, 10_000);
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value > 0.01);
    }

    #[test]
    fn shifted_sample_rejected() {
        let xs: Vec<f64> = uniforms(4, 100_000).into_iter().map(|u| (u + 0.02).min(1.0)).collect();
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        assert!(ks_test(&[0.5; 10], |x| x).is_err());
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Q(1.3581) ≈ 0.05, Q(1.6276) ≈ 0.01.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn two_sample_same_law() {
        let a = uniforms(5, 5000);
        let b = uniforms(6, 7000);
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        let c: Vec<f64> = b.iter().map(|x| x * 0.9).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi_square_reference() {
        // P(χ²₂ > x) = e^{-x/2}.
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
        let (s, df, p) = chi_square_gof(&[10.0, 20.0, 30.0], &[20.0, 20.0, 20.0]).unwrap();
        assert_eq!(df, 2);
        assert!((s - 10.0).abs() < 1e-12 && (p - (-5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rank_tests_detect_dependence() {
        let a = uniforms(7, 20_000);
        let b = uniforms(8, 20_000);
        assert!(spearman(&a, &b).abs() < 0.03);
        assert!(rank_independence(&a, &b, 5).unwrap().2 > 0.01);
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + 0.3 * y).collect();
        assert!(rank_independence(&a, &c, 5).unwrap().2 < 1e-6);
        let p = normal_cdf(1.959_963_984_540_054);
        // statrs erfc is good to about 1e-12 here.
        assert!((p - 0.975).abs() < 5e-12, "{p}");
    }
}
