//! Degenerations of the polymer: the zero-temperature (tropical) limit to
//! exponential last passage percolation, the Laguerre unitary ensemble
//! identity, the closed-form LPP density at `n = N`, and the semi-discrete
//! (Brownian) limit.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::mc::{replicate, Estimate};
use crate::quad::{adaptive, Tolerance};
use crate::rsk::{for_each_tuple, log_add_exp, tropical_evolve, LogWeight, Pattern};
use crate::specfun::stats::{chi_square_gof, jarque_bera, ks_two_sample, KsResult};
use crate::specfun::{sample_log_gamma, sample_log_inverse_gamma, trigamma, RngStream, SolvableParams};

/// Sup-norm distances between `F^ε = ε log z^ε` and `L` for one `ε`.
#[derive(Clone, Debug, Serialize)]
pub struct TropicalLevel {
    pub eps: f64,
    /// Mean over replicas of `max_{k,ℓ} |F^ε_{kℓ} - L_{kℓ}|`.
    pub distance: Estimate,
    /// Mean over replicas of the pathwise envelope `max_{k,ℓ} bound_{kℓ}`.
    pub envelope: Estimate,
    /// Replicas where some entry left its envelope.
    pub envelope_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TropicalReport {
    pub n: usize,
    pub size: usize,
    pub replicas: usize,
    pub levels: Vec<TropicalLevel>,
    /// Consecutive mean distances never increase by more than two
    /// combined standard errors.
    pub monotone: bool,
    /// Largest interlacing violation of `L` over all replicas (≤ 0 when
    /// every sample interlaces).
    pub interlacing_defect: f64,
}

/// Per-cell coupled draw: `w = -log U / γ ∼ Exp(γ)` and, for each `ε`,
/// `log d^ε = log G_{εγ+1}·(-1) - log U/(εγ)`, so that
/// `ε log d^ε = w - ε log G_{εγ+1}`.
struct CoupledCell {
    w: f64,
    /// `ε log G_{εγ+1}` per level.
    defect: Vec<f64>,
}

fn coupled_cell(gamma: f64, eps_list: &[f64], rng: &mut RngStream) -> CoupledCell {
    let log_u = rng.open_uniform().ln();
    let w = -log_u / gamma;
    let defect = eps_list.iter().map(|&e| e * sample_log_gamma(e * gamma + 1.0, rng)).collect();
    CoupledCell { w, defect }
}

/// Couples `d^ε_{ij} ∼ Γ^{-1}(εγ_{ij})` and `w_{ij} ∼ Exp(γ_{ij})` through a
/// common uniform, evolves the geometric array at every `ε` and the (max,+)
/// array once, and reports sup-norm distances. The envelope for entry
/// `(k, ℓ)` is `b_{kℓ} + b_{k,ℓ-1}` with
/// `b_{kℓ} = ε log #(ℓ-tuples) + Σ |ε log G|` over the `n × k` corner.
pub fn tropical_limit_run(
    params: &SolvableParams,
    n: usize,
    eps_list: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<TropicalReport> {
    params.validate(n)?;
    let size = params.size();
    if n == 0 || size == 0 || replicas < 2 {
        return Err(contract("need n ≥ 1, N ≥ 1 and at least two replicas"));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(contract("ε list must be positive and strictly decreasing"));
    }
    let fill = n.min(size);
    // Tuple counts C_{kℓ}.
    let mut log_count = vec![vec![0.0; fill]; size];
    for k in 1..=size {
        for l in 1..=k.min(fill) {
            log_count[k - 1][l - 1] = (for_each_tuple(n, size, k, l, |_| {})? as f64).ln();
        }
    }
    let levels_n = eps_list.len();
    let per_replica = replicate(seed, "tropical", replicas, |rng| -> Result<(Vec<f64>, Vec<f64>, Vec<bool>, f64)> {
        let cells: Vec<Vec<CoupledCell>> =
            (1..=n).map(|m| (1..=size).map(|j| coupled_cell(params.gamma(m, j), eps_list, rng)).collect()).collect();
        let w: Vec<Vec<f64>> = cells.iter().map(|r| r.iter().map(|c| c.w).collect()).collect();
        let l = tropical_evolve(&w, n)?;
        let mut dist = Vec::with_capacity(levels_n);
        let mut env = Vec::with_capacity(levels_n);
        let mut ok = Vec::with_capacity(levels_n);
        for (e, &eps) in eps_list.iter().enumerate() {
            let mut p = Pattern::<LogWeight>::empty(size);
            for row in &cells {
                let word: Vec<LogWeight> = row.iter().map(|c| LogWeight((c.w - c.defect[e]) / eps)).collect();
                p.insert_mut(&word);
            }
            let mut worst = 0.0f64;
            let mut worst_env = 0.0f64;
            let mut inside = true;
            for k in 1..=size {
                let corner: f64 = cells.iter().map(|r| r[..k].iter().map(|c| c.defect[e].abs()).sum::<f64>()).sum();
                let b = |l: usize| if l == 0 { 0.0 } else { eps * log_count[k - 1][l - 1] + corner };
                for li in 1..=k.min(fill) {
                    let f = eps * p.get(k, li).0;
                    let gap = (f - l.get(k, li)).abs();
                    let bound = b(li) + b(li - 1);
                    worst = worst.max(gap);
                    worst_env = worst_env.max(bound);
                    inside &= gap <= bound * (1.0 + 1e-12) + 1e-12;
                }
            }
            dist.push(worst);
            env.push(worst_env);
            ok.push(inside);
        }
        Ok((dist, env, ok, l.interlacing_defect()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let levels: Vec<TropicalLevel> = eps_list
        .iter()
        .enumerate()
        .map(|(e, &eps)| TropicalLevel {
            eps,
            distance: Estimate::from_samples(&per_replica.iter().map(|r| r.0[e]).collect::<Vec<_>>()),
            envelope: Estimate::from_samples(&per_replica.iter().map(|r| r.1[e]).collect::<Vec<_>>()),
            envelope_violations: per_replica.iter().filter(|r| !r.2[e]).count(),
        })
        .collect();
    let monotone = levels.windows(2).all(|w| {
        let se = w[0].distance.std_error.hypot(w[1].distance.std_error);
        w[1].distance.mean <= w[0].distance.mean + 2.0 * se
    });
    let interlacing_defect = per_replica.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    Ok(TropicalReport { n, size, replicas, levels, monotone, interlacing_defect })
}

/// Eigenvalues of a Hermitian `dim × dim` matrix (row-major), sorted
/// descending. Closed form for `dim ≤ 2`; otherwise cyclic Jacobi on the
/// real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is
/// that of the matrix with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &[Complex64], dim: usize) -> Result<Vec<f64>> {
    if m.len() != dim * dim {
        return Err(contract("matrix length is not dim²"));
    }
    match dim {
        0 => Ok(vec![]),
        1 => Ok(vec![m[0].re]),
        2 => {
            let (a, c) = (m[0].re, m[3].re);
            let mid = 0.5 * (a + c);
            let r = (0.5 * (a - c)).hypot(m[1].norm());
            Ok(vec![mid + r, mid - r])
        }
        _ => {
            let n2 = 2 * dim;
            let mut s = vec![0.0; n2 * n2];
            for i in 0..dim {
                for j in 0..dim {
                    let z = m[i * dim + j];
                    s[i * n2 + j] = z.re;
                    s[(i + dim) * n2 + j + dim] = z.re;
                    s[i * n2 + j + dim] = -z.im;
                    s[(i + dim) * n2 + j] = z.im;
                }
            }
            let mut ev = jacobi_eigenvalues(&mut s, n2)?;
            ev.sort_by(|a, b| b.total_cmp(a));
            Ok(ev.into_iter().step_by(2).collect())
        }
    }
}

/// Cyclic Jacobi rotations on a real symmetric matrix; returns the diagonal.
fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = (if theta >= 0.0 { 1.0 } else { -1.0 }) / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::Convergence("Jacobi sweeps did not diagonalize".into()))
}

/// Top eigenvalue of `A A*` with `A_{ij}` (`i ≤ N`, `j ≤ n`) independent
/// standard complex Gaussians of variance `1/(θ_i + θ̂_j)`.
pub fn sample_wishart_top(params: &SolvableParams, n: usize, rng: &mut RngStream) -> Result<f64> {
    let dim = params.size();
    let mut a = vec![Complex64::new(0.0, 0.0); dim * n];
    for i in 0..dim {
        for j in 0..n {
            let sd = (0.5 / (params.theta[i] + params.theta_hat[j])).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            a[i * n + j] = Complex64::new(sd * re, sd * im);
        }
    }
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            m[i * dim + k] = (0..n).map(|j| a[i * n + j] * a[k * n + j].conj()).sum();
        }
    }
    Ok(hermitian_eigenvalues(&m, dim)?[0])
}

/// `L_{N,1}(n)` with `w_{mj} ∼ Exp(θ̂_m + θ_j)`.
pub fn sample_lpp_top(params: &SolvableParams, n: usize, rng: &mut RngStream) -> Result<f64> {
    let size = params.size();
    let w: Vec<Vec<f64>> =
        (1..=n).map(|m| (1..=size).map(|j| -rng.open_uniform().ln() / params.gamma(m, j)).collect()).collect();
    Ok(tropical_evolve(&w, n)?.get(size, 1))
}

#[derive(Clone, Debug, Serialize)]
pub struct LueReport {
    pub size: usize,
    pub n: usize,
    pub replicas: usize,
    pub ks: KsResult,
    pub eigenvalue_mean: Estimate,
    pub lpp_mean: Estimate,
}

/// Two-sample KS between the top Wishart eigenvalue and `L_{N,1}(n)`.
pub fn lue_compare(params: &SolvableParams, n: usize, replicas: usize, seed: u64) -> Result<LueReport> {
    params.validate(n)?;
    let size = params.size();
    if size == 0 || size > 3 {
        return Err(Error::Size(format!("eigenvalues are implemented for N ≤ 3, got {size}")));
    }
    if n == 0 {
        return Err(contract("need n ≥ 1"));
    }
    if replicas < 100 {
        return Err(contract(format!("two-sample KS needs at least 100 replicas, got {replicas}")));
    }
    let eig = replicate(seed, "lue-eigen", replicas, |rng| sample_wishart_top(params, n, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lpp = replicate(seed, "lue-lpp", replicas, |rng| sample_lpp_top(params, n, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(LueReport {
        size,
        n,
        replicas,
        ks: ks_two_sample(&eig, &lpp)?,
        eigenvalue_mean: Estimate::from_samples(&eig),
        lpp_mean: Estimate::from_samples(&lpp),
    })
}

/// The density of `(L_{2,1}(2), L_{2,2}(2))`,
/// `det[e^{-θ_i x_j}] det[e^{-θ̂_i x_j}] / det[1/(θ_i + θ̂_j)]` on
/// `x₁ ≥ x₂ ≥ 0`, written in `u = x₂`, `v = x₁ - x₂` as a signed sum of
/// `c·e^{-(a+b)u - a v}`.
#[derive(Clone, Debug, Serialize)]
pub struct LppDensity {
    /// `(sign / Z, a, b)` per term.
    terms: Vec<(f64, f64, f64)>,
}

impl LppDensity {
    pub fn new(theta: [f64; 2], theta_hat: [f64; 2]) -> Result<Self> {
        let g = |i: usize, j: usize| theta[i] + theta_hat[j];
        if (0..2).any(|i| (0..2).any(|j| !(g(i, j) > 0.0))) {
            return Err(contract("need θ_i + θ̂_j > 0"));
        }
        if theta[0] == theta[1] || theta_hat[0] == theta_hat[1] {
            return Err(contract("the closed form needs distinct θ's and distinct θ̂'s"));
        }
        let z = 1.0 / (g(0, 0) * g(1, 1)) - 1.0 / (g(0, 1) * g(1, 0));
        let terms = vec![
            (1.0 / z, g(0, 0), g(1, 1)),
            (-1.0 / z, g(0, 1), g(1, 0)),
            (-1.0 / z, g(1, 0), g(0, 1)),
            (1.0 / z, g(1, 1), g(0, 0)),
        ];
        Ok(LppDensity { terms })
    }

    /// Density in `(x₁, x₂)`; zero off the ordered quadrant.
    pub fn density(&self, x1: f64, x2: f64) -> f64 {
        if !(x2 >= 0.0 && x1 >= x2) {
            return 0.0;
        }
        self.terms.iter().map(|&(c, a, b)| c * (-a * x1 - b * x2).exp()).sum()
    }

    /// Mass of `[u0, u1] × [v0, v1]` in `(u, v) = (x₂, x₁ - x₂)`; infinite
    /// upper edges allowed.
    pub fn cell_mass(&self, u: (f64, f64), v: (f64, f64)) -> f64 {
        let part = |r: f64, lo: f64, hi: f64| ((-r * lo).exp() - (-r * hi).exp()) / r;
        self.terms.iter().map(|&(c, a, b)| c * part(a + b, u.0, u.1) * part(a, v.0, v.1)).sum()
    }

    fn u_cdf(&self, t: f64) -> f64 {
        self.cell_mass((0.0, t), (0.0, f64::INFINITY))
    }

    fn v_cdf(&self, t: f64) -> f64 {
        self.cell_mass((0.0, f64::INFINITY), (0.0, t))
    }
}

fn quantile(cdf: impl Fn(f64) -> f64, p: f64) -> f64 {
    let mut hi = 1.0;
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct LppDensityReport {
    /// `∫ density` by nested adaptive quadrature.
    pub normalization: f64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub bins_per_axis: usize,
    pub replicas: usize,
    /// Smallest density value seen at a sampled point; must be ≥ 0.
    pub min_density_at_samples: f64,
    /// Samples with `L_{2,1} < L_{2,2}` (must be zero).
    pub order_violations: usize,
}

/// Chi-square goodness of fit of simulated `(L_{2,1}(2), L_{2,2}(2))`
/// against the closed-form density, on a `bins × bins` grid in
/// `(x₂, x₁ - x₂)` with edges at marginal quantiles.
pub fn lpp_density_check(params: &SolvableParams, replicas: usize, bins: usize, seed: u64) -> Result<LppDensityReport> {
    params.validate(2)?;
    if params.size() != 2 {
        return Err(Error::Size("the closed-form LPP density is implemented for N = 2".into()));
    }
    if replicas < 5 * bins * bins {
        return Err(contract(format!("{replicas} replicas are too few for {bins}×{bins} bins")));
    }
    let dens = LppDensity::new([params.theta[0], params.theta[1]], [params.theta_hat[0], params.theta_hat[1]])?;
    let tol = Tolerance::rel(1e-11);
    let normalization = adaptive(
        |x2: f64| adaptive(|x1: f64| dens.density(x1, x2), x2, x2 + 200.0 / dens.min_rate(), tol).value,
        0.0,
        200.0 / dens.min_rate(),
        tol,
    )
    .value;
    let samples = replicate(seed, "lpp-density", replicas, |rng| -> Result<(f64, f64)> {
        let w: Vec<Vec<f64>> =
            (1..=2).map(|m| (1..=2).map(|j| -rng.open_uniform().ln() / params.gamma(m, j)).collect()).collect();
        let l = tropical_evolve(&w, 2)?;
        Ok((l.get(2, 1), l.get(2, 2)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let edges = |cdf: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mut e: Vec<f64> = (0..bins).map(|i| if i == 0 { 0.0 } else { quantile(cdf, i as f64 / bins as f64) }).collect();
        e.push(f64::INFINITY);
        e
    };
    let ue = edges(&|t| dens.u_cdf(t));
    let ve = edges(&|t| dens.v_cdf(t));
    let locate = |e: &[f64], x: f64| e.partition_point(|b| *b <= x).clamp(1, bins) - 1;
    let mut observed = vec![0.0; bins * bins];
    let mut order_violations = 0;
    let mut min_density_at_samples = f64::INFINITY;
    for &(x1, x2) in &samples {
        if x1 < x2 {
            order_violations += 1;
            continue;
        }
        min_density_at_samples = min_density_at_samples.min(dens.density(x1, x2));
        observed[locate(&ue, x2) * bins + locate(&ve, x1 - x2)] += 1.0;
    }
    let mut expected = Vec::with_capacity(bins * bins);
    for i in 0..bins {
        for j in 0..bins {
            expected.push(replicas as f64 * dens.cell_mass((ue[i], ue[i + 1]), (ve[j], ve[j + 1])));
        }
    }
    let (statistic, df, p_value) = chi_square_gof(&observed, &expected)?;
    Ok(LppDensityReport {
        normalization,
        statistic,
        df,
        p_value,
        bins_per_axis: bins,
        replicas,
        min_density_at_samples,
        order_violations,
    })
}

impl LppDensity {
    fn min_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.1.min(t.2)).fold(f64::INFINITY, f64::min)
    }
}

/// `log z_{N,1}(n)` with every weight `Γ^{-1}(n)`, in the log domain.
pub fn log_polymer_homogeneous(size: usize, n: usize, rng: &mut RngStream) -> f64 {
    let mut col = vec![f64::NEG_INFINITY; size];
    for m in 0..n {
        let mut below = f64::NEG_INFINITY;
        for (j, cell) in col.iter_mut().enumerate() {
            let prev = if m == 0 && j == 0 { 0.0 } else { log_add_exp(*cell, below) };
            *cell = prev + sample_log_inverse_gamma(n as f64, rng);
            below = *cell;
        }
    }
    col[size - 1]
}

/// `log ∫_{0<s₁<⋯<s_{N-1}<1} exp(B₁(s₁) + (B₂(s₂) - B₂(s₁)) + ⋯ + (B_N(1) - B_N(s_{N-1}))) ds`
/// by the Euler scheme `Z_j ← (Z_j + h Z_{j-1}) e^{ΔB_j}` on `steps` steps.
pub fn log_semidiscrete_polymer(size: usize, steps: usize, rng: &mut RngStream) -> f64 {
    let h = 1.0 / steps as f64;
    let sd = h.sqrt();
    let mut z = vec![f64::NEG_INFINITY; size];
    z[0] = 0.0;
    for _ in 0..steps {
        for j in (0..size).rev() {
            let fed = if j == 0 { z[0] } else { log_add_exp(z[j], h.ln() + z[j - 1]) };
            let db: f64 = rng.sample(StandardNormal);
            z[j] = fed + sd * db;
        }
    }
    z[size - 1]
}

#[derive(Clone, Debug, Serialize)]
pub struct SemidiscretePoint {
    pub n: usize,
    /// `log(nⁿ z_{N,1}(n)) - 1/2`.
    pub mean: Estimate,
    pub variance: f64,
    pub mean_gap: f64,
    pub variance_gap: f64,
    /// `n Ψ₁(n)`: the per-step variance scaling, tending to 1.
    pub variance_scaling: f64,
    /// Jarque–Bera p-value of the rescaled quantity.
    pub normality_p_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemidiscreteReport {
    pub size: usize,
    pub replicas: usize,
    pub brownian_steps: usize,
    pub brownian_mean: Estimate,
    pub brownian_variance: f64,
    pub points: Vec<SemidiscretePoint>,
    /// Mean gaps shrink along `n_list` (within two standard errors).
    pub shrinking: bool,
    /// `|mean gap| ≤ 0.05·max(|Brownian mean|, Brownian sd)` at the largest `n`.
    pub within_tolerance: bool,
}

/// Trend of `log(nⁿ z_{N,1}(n)) - 1/2` toward the Brownian semi-discrete
/// polymer. Qualitative: the finite-`n` gap is only reported.
pub fn semidiscrete_trend(
    size: usize,
    n_list: &[usize],
    replicas: usize,
    brownian_steps: usize,
    seed: u64,
) -> Result<SemidiscreteReport> {
    if size == 0 || n_list.is_empty() || n_list.contains(&0) || replicas < 2 || brownian_steps == 0 {
        return Err(contract("need N ≥ 1, nonempty positive n list, two replicas and one Brownian step"));
    }
    let bm = replicate(seed, "semidiscrete-bm", replicas, |rng| log_semidiscrete_polymer(size, brownian_steps, rng));
    let brownian_mean = Estimate::from_samples(&bm);
    let brownian_variance = brownian_mean.variance();
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let shift = n as f64 * (n as f64).ln() - 0.5;
        let v = replicate(seed, &format!("semidiscrete-{n}"), replicas, |rng| log_polymer_homogeneous(size, n, rng) + shift);
        let mean = Estimate::from_samples(&v);
        let variance = mean.variance();
        points.push(SemidiscretePoint {
            n,
            mean,
            variance,
            mean_gap: mean.mean - brownian_mean.mean,
            variance_gap: variance - brownian_variance,
            variance_scaling: n as f64 * trigamma(n as f64)?,
            normality_p_value: jarque_bera(&v).1,
        });
    }
    let shrinking = points.windows(2).all(|w| {
        let se = w[0].mean.std_error.hypot(w[1].mean.std_error).hypot(brownian_mean.std_error);
        w[1].mean_gap.abs() <= w[0].mean_gap.abs() + 2.0 * se
    });
    let last = points.last().expect("nonempty");
    let within_tolerance = last.mean_gap.abs() <= 0.05 * brownian_mean.mean.abs().max(brownian_variance.sqrt());
    Ok(SemidiscreteReport {
        size,
        replicas,
        brownian_steps,
        brownian_mean,
        brownian_variance,
        points,
        shrinking,
        within_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::stats::ks_test;

    #[test]
    fn single_column_coupling_is_exact_in_the_limit() {
        // N = 1: F^ε = Σ ε log d^ε and L = Σ w; their gap is Σ ε log G_{εγ+1}.
        let p = SolvableParams::homogeneous(1.0, 5, 1).unwrap();
        let r = tropical_limit_run(&p, 5, &[0.5, 0.1, 0.01, 0.001], 2000, 4).unwrap();
        assert!(r.levels.iter().all(|l| l.envelope_violations == 0));
        assert!(r.levels[3].distance.mean < 0.01, "{:?}", r.levels[3]);
        assert!(r.monotone);
    }

    #[test]
    fn tropical_envelope_holds_at_four_by_four() {
        let p = SolvableParams::homogeneous(1.0, 4, 4).unwrap();
        let r = tropical_limit_run(&p, 4, &[0.5, 0.2, 0.1, 0.05], 500, 1).unwrap();
        assert!(r.levels.iter().all(|l| l.envelope_violations == 0), "{:?}", r.levels);
        assert!(r.monotone);
        assert!(r.interlacing_defect <= 1e-12);
        assert!(tropical_limit_run(&p, 4, &[0.1, 0.2], 10, 1).is_err());
    }

    #[test]
    fn hermitian_eigenvalues_match_closed_form_and_jacobi() {
        let c = |a, b| Complex64::new(a, b);
        let m2 = [c(2.0, 0.0), c(0.5, -1.0), c(0.5, 1.0), c(1.0, 0.0)];
        let e2 = hermitian_eigenvalues(&m2, 2).unwrap();
        // Characteristic polynomial x² - 3x + (2 - 1.25).
        assert!((e2[0] - (1.5 + (2.25f64 - 0.75).sqrt())).abs() < 1e-14);
        let m3 = [
            c(3.0, 0.0), c(1.0, 1.0), c(0.0, -0.5),
            c(1.0, -1.0), c(2.0, 0.0), c(0.3, 0.2),
            c(0.0, 0.5), c(0.3, -0.2), c(1.0, 0.0),
        ];
        let e3 = hermitian_eigenvalues(&m3, 3).unwrap();
        assert!(e3.windows(2).all(|w| w[0] >= w[1]));
        assert!((e3.iter().sum::<f64>() - 6.0).abs() < 1e-12);
        // det(M - λI) vanishes at every eigenvalue.
        for &l in &e3 {
            let a = |i: usize, j: usize| m3[i * 3 + j] - if i == j { c(l, 0.0) } else { c(0.0, 0.0) };
            let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
            assert!(det.norm() < 1e-11, "{det}");
        }
        assert!(hermitian_eigenvalues(&m3, 2).is_err());
    }

    #[test]
    fn one_column_laws_agree() {
        // N = 1: both sides are sums of independent exponentials.
        let p = SolvableParams::new(vec![0.8, 1.1, 1.5], vec![0.2]).unwrap();
        let r = lue_compare(&p, 3, 20_000, 5).unwrap();
        assert!(r.ks.p_value > 0.01, "{r:?}");
        let exact = 1.0 / 1.0 + 1.0 / 1.3 + 1.0 / 1.7;
        assert!(r.lpp_mean.covers(exact, 4.0) && r.eigenvalue_mean.covers(exact, 4.0));
    }

    #[test]
    fn three_by_three_laws_agree() {
        let p = SolvableParams::new(vec![1.0, 0.7, 1.3], vec![0.1, 0.3, 0.0]).unwrap();
        let r = lue_compare(&p, 3, 20_000, 6).unwrap();
        assert!(r.ks.p_value > 0.01, "{r:?}");
        assert!(lue_compare(&SolvableParams::homogeneous(1.0, 2, 4).unwrap(), 2, 200, 1).is_err());
    }

    #[test]
    fn lpp_density_closed_form() {
        let d = LppDensity::new([-0.2, 0.1], [0.9, 1.2]).unwrap();
        let total = d.cell_mass((0.0, f64::INFINITY), (0.0, f64::INFINITY));
        assert!((total - 1.0).abs() < 1e-13);
        assert!(d.density(0.5, 1.0) == 0.0 && d.density(1.0, 0.5) > 0.0);
        assert!(LppDensity::new([0.1, 0.1], [0.9, 1.2]).is_err());
    }

    #[test]
    fn lpp_density_fits_simulation() {
        let p = SolvableParams::new(vec![0.9, 1.2], vec![-0.2, 0.1]).unwrap();
        let r = lpp_density_check(&p, 20_000, 10, 3).unwrap();
        assert!((r.normalization - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.p_value > 0.01 && r.order_violations == 0 && r.min_density_at_samples >= 0.0, "{r:?}");
    }

    #[test]
    fn single_column_semidiscrete_is_gaussian() {
        // N = 1: the rescaled quantity is a sum of centred log-gammas with
        // variance n Ψ₁(n) → 1; the Brownian side is B(1).
        let r = semidiscrete_trend(1, &[10, 400], 4000, 50, 8).unwrap();
        let last = &r.points[1];
        assert!(last.normality_p_value > 0.01, "{last:?}");
        assert!((last.variance_scaling - 1.0).abs() < 2e-3);
        assert!(r.brownian_mean.covers(0.0, 4.0));
        let bm: Vec<f64> = replicate(2, "bm", 4000, |rng| log_semidiscrete_polymer(1, 20, rng));
        assert!(ks_test(&bm, crate::specfun::stats::normal_cdf).unwrap().p_value > 0.01);
    }

    #[test]
    fn homogeneous_polymer_matches_linear_recursion() {
        let mut a = RngStream::new(4, 0);
        let mut b = RngStream::new(4, 0);
        let l = log_polymer_homogeneous(2, 3, &mut a);
        let d: Vec<f64> = (0..6).map(|_| sample_log_inverse_gamma(3.0, &mut b).exp()).collect();
        // Cells in row-major order (m, j): paths from (0,0) to (2,1).
        let z = d[0] * d[2] * d[4] * d[5] + d[0] * d[2] * d[3] * d[5] + d[0] * d[1] * d[3] * d[5];
        assert!((l - z.ln()).abs() < 1e-12);
    }
}
