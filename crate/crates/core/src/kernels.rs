//! Markov and intertwining kernels of the array dynamics, and numerical
//! checks of the relations between them.
//!
//! Densities are with respect to `∏ dz/z` over the free coordinates and are
//! computed as logarithms first.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, domain, Error, Result};
use crate::mc::{effective_sample_size, replicate, ratio_estimate, Estimate};
use crate::optimize::{cholesky, cholesky_solve, Concave};
use crate::quad::{adaptive, find_support, nested, NestedOptions, QuadResult, Tolerance};
use crate::rsk::TriangularArray;
use crate::specfun::stats::{ks_test, KsResult};
use crate::specfun::{ln_gamma, ln_gamma_c, sample_inverse_gamma, sample_log_inverse_gamma, RngStream, SolvableParams};
use crate::whittaker::{pattern_dim, pattern_index, psi, psi_real, PatternIntegrand, QuadratureSpec};

/// Parameters at one time step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelContext {
    pub params: SolvableParams,
    /// Time index `n ≥ 1` selecting `θ̂_n`.
    pub time: usize,
}

impl KernelContext {
    pub fn new(params: SolvableParams, time: usize) -> Result<Self> {
        if time == 0 {
            return Err(contract("time index starts at 1"));
        }
        params.validate(time)?;
        Ok(KernelContext { params, time })
    }

    pub fn size(&self) -> usize {
        self.params.size()
    }

    /// `γ_{n,j}`, 1-based `j`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.params.gamma(self.time, j)
    }

    pub fn theta(&self) -> &[f64] {
        &self.params.theta
    }

    pub fn theta_hat(&self) -> f64 {
        self.params.theta_hat[self.time - 1]
    }

    /// Context for another time step with the same parameters.
    pub fn at(&self, time: usize) -> Result<Self> {
        Self::new(self.params.clone(), time)
    }
}

/// A state with a nonnegative importance or killing weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSample<S> {
    pub state: S,
    pub weight: f64,
}

fn positive(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(domain(format!("{what} must be positive")));
    }
    Ok(())
}

/// Log-density of `ỹ = d·y`, `d ∼ Γ^{-1}(γ)`, with respect to `dỹ/ỹ`.
fn jump_log_density(y: f64, yt: f64, gamma: f64) -> f64 {
    -ln_gamma(gamma) + gamma * (y / yt).ln() - y / yt
}

/// Log of the time-`n` kernel `P^N(y, dỹ)` density, killing factor
/// `∏ exp(-ỹ_{i+1}/y_i)` included.
pub fn p_log_density(y: &[f64], yt: &[f64], ctx: &KernelContext) -> Result<f64> {
    let n = ctx.size();
    if y.len() != n || yt.len() != n {
        return Err(contract(format!("states must have {n} entries")));
    }
    positive(y, "y")?;
    positive(yt, "ỹ")?;
    let kill: f64 = (0..n - 1).map(|i| yt[i + 1] / y[i]).sum();
    let jumps: f64 = (0..n).map(|j| jump_log_density(y[j], yt[j], ctx.gamma(j + 1))).sum();
    Ok(jumps - kill)
}

pub fn p_density(y: &[f64], yt: &[f64], ctx: &KernelContext) -> Result<f64> {
    Ok(p_log_density(y, yt, ctx)?.exp())
}

/// Independent inverse-gamma jumps `ỹ_j = d_j y_j` weighted by the killing
/// factor.
pub fn p_sample(y: &[f64], ctx: &KernelContext, rng: &mut RngStream) -> WeightedSample<Vec<f64>> {
    let n = ctx.size();
    let state: Vec<f64> = (0..n).map(|j| y[j] * sample_inverse_gamma(ctx.gamma(j + 1), rng)).collect();
    let kill: f64 = (0..n - 1).map(|i| state[i + 1] / y[i]).sum();
    WeightedSample { state, weight: (-kill).exp() }
}

/// Log-density of `Λ^k(y, dx)`: `y` is a row of length `k`, `x` of `k-1`.
pub fn lambda_log_density(y: &[f64], x: &[f64], theta: &[f64]) -> Result<f64> {
    let k = y.len();
    if x.len() + 1 != k || theta.len() < k {
        return Err(contract("Λ needs rows of lengths k and k-1 and k parameters"));
    }
    positive(y, "y")?;
    positive(x, "x")?;
    Ok((0..k - 1)
        .map(|l| (theta[k - 1] - theta[l]) * (x[l] / y[l]).ln() - x[l] / y[l] - y[l + 1] / x[l])
        .sum())
}

pub fn lambda_density(y: &[f64], x: &[f64], theta: &[f64]) -> Result<f64> {
    Ok(lambda_log_density(y, x, theta)?.exp())
}

/// Log-density of `K^N_θ(y, dz)` over the free coordinates of `z`, from the
/// pairwise form. `-∞` when the bottom row of `z` differs from `y`.
pub fn k_log_density(y: &[f64], z: &TriangularArray, theta: &[f64]) -> Result<f64> {
    let n = z.size();
    if y.len() != n || theta.len() != n || z.fill() != n {
        return Err(contract("pattern, bottom row and parameters differ in size"));
    }
    positive(y, "y")?;
    if z.shape().iter().zip(y).any(|(a, b)| a != b) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut s = 0.0;
    for k in 1..n {
        for l in 1..=k {
            let r = z.get(k, l) / z.get(k + 1, l);
            s += (theta[k] - theta[l - 1]) * r.ln() - r - z.get(k + 1, l + 1) / z.get(k, l);
        }
    }
    Ok(s)
}

pub fn k_density(y: &[f64], z: &TriangularArray, theta: &[f64]) -> Result<f64> {
    Ok(k_log_density(y, z, theta)?.exp())
}

/// `K` as the product of `Λ` factors down the rows.
pub fn k_log_density_by_rows(z: &TriangularArray, theta: &[f64]) -> Result<f64> {
    let rows = z.rows();
    (2..=z.size()).map(|k| lambda_log_density(&rows[k - 1], &rows[k - 2], theta)).sum()
}

/// Row update of the array chain: given the old rows `k-1` (`x`) and `k`
/// (`y`), the updated row `k-1` (`xt`) and the fresh weight `a`, returns the
/// updated row `k`. For `k = 1` both `x` and `xt` are empty.
pub fn l_push(x: &[f64], y: &[f64], xt: &[f64], a: f64) -> Result<Vec<f64>> {
    let k = y.len();
    if x.len() + 1 != k || xt.len() + 1 != k {
        return Err(contract("L needs rows of lengths k-1, k, k-1"));
    }
    positive(x, "x")?;
    positive(y, "y")?;
    positive(xt, "x̃")?;
    if !(a > 0.0) {
        return Err(domain("weight must be positive"));
    }
    let mut out = Vec::with_capacity(k);
    out.push(a * (y[0] + xt.first().copied().unwrap_or(0.0)));
    for l in 1..k - 1 {
        out.push(y[l - 1] * xt[l - 1] / x[l - 1] * (y[l] + xt[l]) / (y[l - 1] + xt[l - 1]));
    }
    if k >= 2 {
        out.push(y[k - 1] * y[k - 2] * xt[k - 2] / ((y[k - 2] + xt[k - 2]) * x[k - 2]));
    }
    Ok(out)
}

/// Samples `a ∼ Γ^{-1}(γ)` and applies [`l_push`].
pub fn l_sample(x: &[f64], y: &[f64], xt: &[f64], gamma: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    l_push(x, y, xt, sample_inverse_gamma(gamma, rng))
}

/// Log-density of `L^k((x, y; x̃), dỹ)` with respect to `dỹ_1/ỹ_1`. The
/// remaining coordinates are a deterministic function of the inputs; `-∞`
/// unless `ỹ` matches them to relative precision `1e-12`.
pub fn l_log_density(x: &[f64], y: &[f64], xt: &[f64], yt: &[f64], gamma: f64) -> Result<f64> {
    let det = l_push(x, y, xt, 1.0)?;
    if yt.len() != det.len() {
        return Err(contract("ỹ has the wrong length"));
    }
    positive(yt, "ỹ")?;
    if det.iter().zip(yt).skip(1).any(|(a, b)| ((a - b) / a).abs() > 1e-12) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(jump_log_density(det[0], yt[0], gamma))
}

fn draw_word(ctx: &KernelContext, rng: &mut RngStream) -> Vec<f64> {
    (1..=ctx.size()).map(|j| sample_inverse_gamma(ctx.gamma(j), rng)).collect()
}

/// One step of the array chain: insertion of a fresh inverse-gamma word.
pub fn pi_step(z: &TriangularArray, ctx: &KernelContext, rng: &mut RngStream) -> Result<TriangularArray> {
    let word = draw_word(ctx, rng);
    Ok(z.insert_row(&word)?.0)
}

/// One step of the array chain in the log domain, for long runs.
pub fn pi_step_log(z: &TriangularArray, ctx: &KernelContext, rng: &mut RngStream) -> Result<TriangularArray> {
    let word: Vec<f64> = (1..=ctx.size()).map(|j| sample_log_inverse_gamma(ctx.gamma(j), rng)).collect();
    Ok(z.insert_row_log(&word)?.0)
}

/// The same step assembled row by row from `L` kernels; with the same
/// draws it reproduces [`pi_step`].
pub fn pi_step_by_rows(z: &TriangularArray, ctx: &KernelContext, rng: &mut RngStream) -> Result<TriangularArray> {
    let word = draw_word(ctx, rng);
    let rows = z.rows();
    let mut new_rows: Vec<Vec<f64>> = Vec::with_capacity(z.size());
    for k in 1..=z.size() {
        let (x, xt): (&[f64], &[f64]) = if k == 1 { (&[], &[]) } else { (&rows[k - 2], &new_rows[k - 2]) };
        let row = l_push(x, &rows[k - 1], xt, word[k - 1])?;
        new_rows.push(row);
    }
    TriangularArray::from_rows(z.size(), z.size(), new_rows)
}

/// Which eigenfunction to test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EigenMode {
    /// `P w_θ = w_θ`.
    W,
    /// `P̄ (Ψ_λ/Ψ_θ) = ∏_j Γ(θ̂_n+λ_j)/Γ(θ_j+θ̂_n) · Ψ_λ/Ψ_θ`.
    PsiRatio(Vec<Complex64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    /// Monte Carlo estimate of `E[weight ∏ỹ^θ Ψ_λ(ỹ)] / (∏y^θ Ψ_λ(y))`,
    /// real and imaginary parts.
    pub estimate_re: Estimate,
    pub estimate_im: Estimate,
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    /// Largest absolute z-score of the two parts.
    pub z_score: f64,
    pub n_replicas: usize,
    pub seed: u64,
    /// Set when the standard error is too large for the comparison to mean
    /// anything (above 10% of the eigenvalue modulus).
    pub inconclusive: bool,
}

/// Monte Carlo check of the eigenfunction relation at `y`.
pub fn eigenfunction_check(
    y: &[f64],
    ctx: &KernelContext,
    mode: &EigenMode,
    replicas: usize,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<EigenReport> {
    let n = ctx.size();
    if n > 3 {
        return Err(Error::Size("the eigenfunction check needs N ≤ 3".into()));
    }
    positive(y, "y")?;
    let theta = ctx.theta();
    let lambda: Vec<Complex64> = match mode {
        EigenMode::W => theta.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
        EigenMode::PsiRatio(l) => l.clone(),
    };
    if lambda.len() != n {
        return Err(contract("λ has the wrong length"));
    }
    let mut log_eig = Complex64::new(0.0, 0.0);
    for j in 0..n {
        log_eig += ln_gamma_c(lambda[j] + ctx.theta_hat()) - ln_gamma(theta[j] + ctx.theta_hat());
    }
    let eig = log_eig.exp();
    let log_h = |v: &[f64]| theta.iter().zip(v).map(|(t, x)| t * x.ln()).sum::<f64>();
    let base = psi(&lambda, y, spec)? * log_h(y).exp();
    let failure = std::sync::Mutex::new(None);
    let values = replicate(seed, "eigenfunction", replicas, |rng| {
        let s = p_sample(y, ctx, rng);
        if s.weight < 1e-300 {
            return Complex64::new(0.0, 0.0);
        }
        match psi(&lambda, &s.state, spec) {
            Ok(p) => p * (s.weight * log_h(&s.state).exp()) / base,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    });
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let estimate_re = Estimate::from_samples(&re);
    let estimate_im = Estimate::from_samples(&im);
    // Differences at rounding level (e.g. the imaginary part of a real
    // quantity) carry no information; their standard errors are tiny too.
    let floor = 1e-10 * eig.norm();
    let z = |e: &Estimate, target: f64| {
        if (e.mean - target).abs() <= floor {
            0.0
        } else if e.std_error > 0.0 {
            e.z_score(target).abs()
        } else {
            f64::INFINITY
        }
    };
    let z_score = z(&estimate_re, eig.re).max(z(&estimate_im, eig.im));
    let inconclusive = estimate_re.std_error.hypot(estimate_im.std_error) > 0.1 * eig.norm();
    Ok(EigenReport {
        estimate_re,
        estimate_im,
        eigenvalue_re: eig.re,
        eigenvalue_im: eig.im,
        z_score,
        n_replicas: replicas,
        seed,
        inconclusive,
    })
}

/// Test functions on `(z¹, z²)` for the two-row check, in log variables
/// `(log z¹_1, log z²_1, log z²_2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TwoRowTest {
    Constant,
    /// `exp(-|u - c|²/(2w²))`.
    Bump { center: [f64; 3], width: f64 },
    /// `∏ z^{p}` with small exponents.
    Moment { powers: [f64; 3] },
}

impl TwoRowTest {
    fn log_eval(&self, u: &[f64; 3]) -> f64 {
        match self {
            TwoRowTest::Constant => 0.0,
            TwoRowTest::Bump { center, width } => {
                -u.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / (2.0 * width * width)
            }
            TwoRowTest::Moment { powers } => u.iter().zip(powers).map(|(a, p)| a * p).sum(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoRowReport {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub rel_diff: f64,
    pub error: f64,
    pub converged: bool,
}

/// Both sides of the two-row intertwining at `N = 2` against a test
/// function, each by three-dimensional adaptive quadrature in log variables:
/// the left integrates `P²(y, dz²) Λ²(z², dz¹)`, the right integrates
/// `Λ²(y, dx̂) P¹(x̂, dz¹) L²((x̂, y; z¹), dz²)` over `(x̂, z¹, z²_1)`.
pub fn two_row_intertwining_check(y: &[f64], ctx: &KernelContext, test: &TwoRowTest) -> Result<TwoRowReport> {
    two_row_intertwining_check_tol(y, ctx, test, 1e-9)
}

/// [`two_row_intertwining_check`] with an explicit relative tolerance for
/// the nested quadratures.
pub fn two_row_intertwining_check_tol(
    y: &[f64],
    ctx: &KernelContext,
    test: &TwoRowTest,
    rel_tol: f64,
) -> Result<TwoRowReport> {
    if ctx.size() != 2 || y.len() != 2 {
        return Err(Error::Size("the two-row check is implemented for N = 2".into()));
    }
    positive(y, "y")?;
    let th = ctx.theta();
    let (g1, g2) = (ctx.gamma(1), ctx.gamma(2));
    let c = th[1] - th[0];
    let (ly1, ly2) = (y[0].ln(), y[1].ln());
    // Left: coordinates (log z²_1, log z²_2, log z¹).
    let lhs_f = |t: &[f64]| -> f64 {
        let (u1, u2, v) = (t[0], t[1], t[2]);
        let p = jump_log_density(y[0], u1.exp(), g1) + jump_log_density(y[1], u2.exp(), g2) - (u2 - ly1).exp();
        let lam = c * (v - u1) - (v - u1).exp() - (u2 - v).exp();
        (p + lam + test.log_eval(&[v, u1, u2])).exp()
    };
    // Right: coordinates (log x̂, log z¹, log z²_1).
    let rhs_f = |t: &[f64]| -> f64 {
        let (xh, v, a1) = (t[0], t[1], t[2]);
        let lam = c * (xh - ly1) - (xh - ly1).exp() - (ly2 - xh).exp();
        let p1 = jump_log_density(xh.exp(), v.exp(), g1);
        let s = y[0] + v.exp();
        let l2 = jump_log_density(s, a1.exp(), g2);
        let u2 = ly2 + ly1 + v - xh - s.ln();
        (lam + p1 + l2 + test.log_eval(&[v, a1, u2])).exp()
    };
    let mut lo = NestedOptions::new(vec![ly1, ly2, 0.5 * (ly1 + ly2)]);
    lo.rel_tol = rel_tol;
    let mut ro = NestedOptions::new(vec![0.5 * (ly1 + ly2), 0.5 * (ly1 + ly2), ly1]);
    ro.rel_tol = rel_tol;
    let l = nested(&lhs_f, &lo)?;
    let r = nested(&rhs_f, &ro)?;
    let diff = (l.value - r.value).abs();
    Ok(TwoRowReport {
        lhs: l.value,
        rhs: r.value,
        diff,
        rel_diff: diff / l.value.abs().max(r.value.abs()),
        error: l.error + r.error,
        converged: l.converged && r.converged,
    })
}

/// How to draw patterns from the conditional law `K̄_θ(y, ·)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum KbarMethod {
    /// Independent log-Gaussian proposal at the maximizer; weighted samples.
    Importance,
    /// Random-walk Metropolis in log variables; unit weights.
    Metropolis { burn_in: usize, thin: usize, step: f64 },
}

/// Sampler for the pattern with a given bottom row.
#[derive(Clone, Debug)]
pub struct KbarSampler {
    y: Vec<f64>,
    integrand: PatternIntegrand,
    shift: f64,
    peak: Vec<f64>,
    sd: Vec<f64>,
}

impl KbarSampler {
    pub fn new(y: &[f64], theta: &[f64]) -> Result<Self> {
        let n = y.len();
        if theta.len() != n {
            return Err(contract("θ and y differ in length"));
        }
        if n > 4 {
            return Err(Error::Size("the conditional sampler supports N ≤ 4".into()));
        }
        positive(y, "y")?;
        let log_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let integrand = PatternIntegrand::real(theta, &log_y);
        let shift = theta.iter().zip(&log_y).map(|(t, l)| t * l).sum();
        let d = pattern_dim(n);
        let (peak, sd) = if d == 0 {
            (vec![], vec![])
        } else {
            let m = integrand.maximize()?;
            let mut h = vec![0.0; d * d];
            integrand.hessian(&m.x, &mut h);
            h.iter_mut().for_each(|v| *v = -*v);
            if !cholesky(&mut h, d) {
                return Err(Error::Convergence("pattern Hessian is not negative definite".into()));
            }
            // Marginal standard deviations from the inverse Hessian, widened.
            let sd = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    cholesky_solve(&h, d, &mut e);
                    1.3 * e[i].sqrt()
                })
                .collect();
            (m.x, sd)
        };
        Ok(KbarSampler { y: y.to_vec(), integrand, shift, peak, sd })
    }

    /// Log-density of `K_θ(y, ·)` at free log-coordinates.
    pub fn log_target(&self, t: &[f64]) -> f64 {
        self.integrand.re_value(t) + self.shift
    }

    pub fn to_array(&self, t: &[f64]) -> Result<TriangularArray> {
        let n = self.y.len();
        let mut rows = Vec::with_capacity(n);
        for k in 1..n {
            rows.push((1..=k).map(|l| t[pattern_index(k, l)]).collect::<Vec<f64>>());
        }
        rows.push(self.y.iter().map(|v| v.ln()).collect());
        let mut a = TriangularArray::from_log_rows(n, n, rows)?;
        // Keep the bottom row bit-exact.
        if a.shape() != self.y.as_slice() {
            let mut lin: Vec<Vec<f64>> = a.rows().to_vec();
            lin[n - 1] = self.y.clone();
            a = TriangularArray::from_rows(n, n, lin)?;
        }
        Ok(a)
    }

    /// Weighted draw; the weight is `K density / proposal density`, so its
    /// mean is `w_θ(y)`.
    pub fn sample_importance(&self, rng: &mut RngStream) -> Result<WeightedSample<TriangularArray>> {
        let d = self.peak.len();
        let mut t = vec![0.0; d];
        let mut log_q = 0.0;
        for i in 0..d {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            t[i] = self.peak[i] + self.sd[i] * z;
            log_q += -0.5 * z * z - self.sd[i].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        let weight = (self.log_target(&t) - log_q).exp();
        Ok(WeightedSample { state: self.to_array(&t)?, weight })
    }

    /// Metropolis chain of `count` states after burn-in.
    pub fn sample_metropolis(
        &self,
        count: usize,
        burn_in: usize,
        thin: usize,
        step: f64,
        rng: &mut RngStream,
    ) -> Result<Vec<TriangularArray>> {
        let d = self.peak.len();
        let mut t = self.peak.clone();
        let mut lp = self.log_target(&t);
        let mut out = Vec::with_capacity(count);
        let thin = thin.max(1);
        let mut i = 0usize;
        while out.len() < count {
            let mut prop = t.clone();
            for k in 0..d {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                prop[k] += step * self.sd[k] * z;
            }
            let lq = self.log_target(&prop);
            if rng.open_uniform().ln() < lq - lp {
                t = prop;
                lp = lq;
            }
            i += 1;
            if i > burn_in && (i - burn_in) % thin == 0 {
                out.push(self.to_array(&t)?);
            }
        }
        Ok(out)
    }
}

/// Batch of conditional samples with diagnostics.
#[derive(Clone, Debug)]
pub struct KbarBatch {
    pub samples: Vec<WeightedSample<TriangularArray>>,
    /// Effective sample size of the weights.
    pub ess: f64,
    /// Mean importance weight, an estimate of `w_θ(y)`.
    pub normalization: Estimate,
    pub warning: Option<String>,
}

/// Draws `count` samples from `K̄_θ(y, ·)`. Importance batches below 10% ESS
/// carry a warning.
pub fn kbar_conditional_sampler(
    y: &[f64],
    theta: &[f64],
    count: usize,
    seed: u64,
    method: KbarMethod,
) -> Result<KbarBatch> {
    let sampler = KbarSampler::new(y, theta)?;
    let samples: Vec<WeightedSample<TriangularArray>> = match method {
        KbarMethod::Importance => replicate(seed, "kbar-importance", count, |rng| sampler.sample_importance(rng))
            .into_iter()
            .collect::<Result<_>>()?,
        KbarMethod::Metropolis { burn_in, thin, step } => {
            let mut rng = RngStream::tagged(seed, crate::specfun::rng::tag("kbar-metropolis"), 0);
            sampler
                .sample_metropolis(count, burn_in, thin, step, &mut rng)?
                .into_iter()
                .map(|state| WeightedSample { state, weight: 1.0 })
                .collect()
        }
    };
    let w: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let ess = effective_sample_size(&w);
    let normalization = Estimate::from_samples(&w);
    let warning = (ess < 0.1 * count as f64).then(|| format!("effective sample size {ess:.0} of {count}"));
    Ok(KbarBatch { samples, ess, normalization, warning })
}

/// CDF of `z_{1,1}` under `K̄²_θ(y, ·)`, by quadrature of the density
/// `∝ (z/y₁)^{θ₂-θ₁} exp(-z/y₁ - y₂/z) dz/z`.
#[derive(Clone, Debug)]
pub struct TopEntryLaw {
    lo: f64,
    grid: Vec<f64>,
    cdf: Vec<f64>,
    h: f64,
}

impl TopEntryLaw {
    pub fn new(y: &[f64], theta: &[f64]) -> Result<Self> {
        if y.len() != 2 || theta.len() != 2 {
            return Err(Error::Size("the top-entry law is tabulated for N = 2".into()));
        }
        positive(y, "y")?;
        let c = theta[1] - theta[0];
        let (l1, l2) = (y[0].ln(), y[1].ln());
        let logf = move |t: f64| c * (t - l1) - (t - l1).exp() - (l2 - t).exp();
        let s = find_support(logf, 0.5 * (l1 + l2), 40.0)?
            .ok_or_else(|| Error::Convergence("top-entry density vanishes".into()))?;
        // Cumulative Simpson on a fine grid; the density is smooth on the
        // scale of the grid step.
        let m = 4000;
        let h = (s.hi - s.lo) / m as f64;
        let f: Vec<f64> = (0..=m).map(|i| (logf(s.lo + h * i as f64) - s.peak_value).exp()).collect();
        let mut cdf = vec![0.0; m + 1];
        for i in 1..=m {
            let mid = (logf(s.lo + h * (i as f64 - 0.5)) - s.peak_value).exp();
            cdf[i] = cdf[i - 1] + h / 6.0 * (f[i - 1] + 4.0 * mid + f[i]);
        }
        let total = cdf[m];
        cdf.iter_mut().for_each(|v| *v /= total);
        Ok(TopEntryLaw { lo: s.lo, grid: f, cdf, h })
    }

    /// `P(z_{1,1} ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let t = x.ln();
        let pos = (t - self.lo) / self.h;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Resamples weighted states into `count` equally weighted ones
/// (systematic resampling, one uniform).
pub fn resample<S: Clone>(samples: &[WeightedSample<S>], count: usize, rng: &mut RngStream) -> Vec<S> {
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let mut out = Vec::with_capacity(count);
    let u0 = (1.0 - rng.open_uniform()) / count as f64;
    let mut acc = 0.0;
    let mut j = 0;
    for i in 0..count {
        let target = (u0 + i as f64 / count as f64) * total;
        while j + 1 < samples.len() && acc + samples[j].weight < target {
            acc += samples[j].weight;
            j += 1;
        }
        out.push(samples[j].state.clone());
    }
    out
}

/// Outcome of the intertwining check `P K f = K Π f` at `N = 2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntertwiningReport {
    /// `∫ P(y, dỹ) ∫ K(ỹ, dz) f(z)` by quadrature.
    pub lhs: f64,
    pub lhs_error: f64,
    /// `∫ K(y, dz) E[f(Π z)]`: quadrature over `z`, Monte Carlo over `Π`.
    pub rhs: Estimate,
    pub z_score: f64,
}

/// Intertwining check at `N = 2` for the log-Gaussian test function
/// `f(z) = exp(-|log z - c|²/(2w²))` on the three pattern entries
/// `(z₁₁, z₂₁, z₂₂)`.
pub fn intertwining_check(
    y: &[f64],
    ctx: &KernelContext,
    center: [f64; 3],
    width: f64,
    nodes: usize,
    replicas_per_node: usize,
    seed: u64,
) -> Result<IntertwiningReport> {
    if ctx.size() != 2 {
        return Err(Error::Size("the intertwining check is implemented for N = 2".into()));
    }
    positive(y, "y")?;
    let th = ctx.theta().to_vec();
    let c = th[1] - th[0];
    let logf = |t: [f64; 3]| -t.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * width * width);
    let log_k = |b1: f64, b2: f64, v: f64| c * (v - b1) - (v - b1).exp() - (b2 - v).exp();
    let (ly1, ly2) = (y[0].ln(), y[1].ln());
    let lhs_f = |t: &[f64]| -> f64 {
        let (u1, u2, v) = (t[0], t[1], t[2]);
        let p = jump_log_density(y[0], u1.exp(), ctx.gamma(1)) + jump_log_density(y[1], u2.exp(), ctx.gamma(2))
            - (u2 - ly1).exp();
        (p + log_k(u1, u2, v) + logf([v, u1, u2])).exp()
    };
    let mut opts = NestedOptions::new(vec![ly1, ly2, 0.5 * (ly1 + ly2)]);
    opts.rel_tol = 1e-8;
    let lhs = nested(&lhs_f, &opts)?;
    // Right side: Gauss–Legendre in v = log z₁₁ over its support, with a
    // Monte Carlo average of f after one step at every node.
    let s = find_support(|v| log_k(ly1, ly2, v), 0.5 * (ly1 + ly2), 45.0)?
        .ok_or_else(|| Error::Convergence("K density vanishes".into()))?;
    let (xs, ws) = crate::quad::GaussLegendre::cached(nodes).scaled(s.lo, s.hi);
    let per_node = replicate(seed, "intertwining", nodes, |rng| -> Result<(f64, f64)> {
        let v = xs[rng.replica() as usize];
        let z = TriangularArray::from_rows(2, 2, vec![vec![v.exp()], y.to_vec()])?;
        let mut vals = Vec::with_capacity(replicas_per_node);
        for _ in 0..replicas_per_node {
            let zt = pi_step(&z, ctx, rng)?;
            vals.push(logf([zt.log_get(1, 1), zt.log_get(2, 1), zt.log_get(2, 2)]).exp());
        }
        let e = Estimate::from_samples(&vals);
        Ok((e.mean, e.std_error * e.std_error))
    });
    let mut mean = 0.0;
    let mut var = 0.0;
    for (i, r) in per_node.into_iter().enumerate() {
        let (m, v2) = r?;
        let w = ws[i] * log_k(ly1, ly2, xs[i]).exp();
        mean += w * m;
        var += w * w * v2;
    }
    let rhs = Estimate { mean, std_error: var.sqrt(), n: nodes * replicas_per_node };
    let z_score = (lhs.value - mean) / var.sqrt().hypot(lhs.error);
    Ok(IntertwiningReport { lhs: lhs.value, lhs_error: lhs.error, rhs, z_score })
}

/// Samples of the chain run from `z(0) ∼ K̄(y⁰, ·)`.
#[derive(Clone, Debug)]
pub struct ChainSamples {
    pub states: Vec<WeightedSample<TriangularArray>>,
}

/// Runs `steps` array steps from importance-weighted initial patterns.
pub fn run_from_conditional(
    y0: &[f64],
    params: &SolvableParams,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<ChainSamples> {
    params.validate(steps)?;
    let sampler = KbarSampler::new(y0, &params.theta)?;
    let ctxs: Vec<KernelContext> = (1..=steps).map(|m| KernelContext::new(params.clone(), m)).collect::<Result<_>>()?;
    let states = replicate(seed, "conditional-chain", replicas, |rng| -> Result<WeightedSample<TriangularArray>> {
        let mut s = sampler.sample_importance(rng)?;
        for ctx in &ctxs {
            s.state = pi_step(&s.state, ctx, rng)?;
        }
        Ok(s)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(ChainSamples { states })
}

/// Gaussian kernel weight of a bottom row around a target, in log
/// variables.
pub fn bin_weight(shape: &[f64], target: &[f64], bandwidth: f64) -> f64 {
    let r2: f64 = shape.iter().zip(target).map(|(a, b)| (a.ln() - b.ln()).powi(2)).sum();
    (-r2 / (2.0 * bandwidth * bandwidth)).exp()
}

/// Conditional-law check at `N = 2`: the probability integral transform of
/// `z₁₁(n)` under `K̄(y(n), ·)` must be uniform. Samples are restricted to a
/// log-Gaussian window of `bandwidth` around `target`; the transform uses
/// each sample's own bottom row, so the window adds no bias.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalLawReport {
    pub ks: KsResult,
    pub bandwidth: f64,
    pub effective_samples: f64,
}

pub fn conditional_law_check(
    chain: &ChainSamples,
    theta: &[f64],
    target: &[f64],
    bandwidth: f64,
    resample_count: usize,
    seed: u64,
) -> Result<ConditionalLawReport> {
    let weighted: Vec<WeightedSample<f64>> = chain
        .states
        .iter()
        .map(|s| -> Result<WeightedSample<f64>> {
            let w = s.weight * bin_weight(s.state.shape(), target, bandwidth);
            let u = if w > 0.0 { TopEntryLaw::new(s.state.shape(), theta)?.cdf(s.state.get(1, 1)) } else { 0.5 };
            Ok(WeightedSample { state: u, weight: w })
        })
        .collect::<Result<_>>()?;
    let w: Vec<f64> = weighted.iter().map(|s| s.weight).collect();
    let effective_samples = effective_sample_size(&w);
    let mut rng = RngStream::tagged(seed, crate::specfun::rng::tag("conditional-resample"), 0);
    let count = resample_count.min(effective_samples.floor() as usize).max(100);
    let us = resample(&weighted, count, &mut rng);
    let ks = ks_test(&us, |u| u.clamp(0.0, 1.0))?;
    Ok(ConditionalLawReport { ks, bandwidth, effective_samples })
}

/// Conditional moment `E[∏ x_i(n)^{-λ_i} | y(n)]` against
/// `Ψ_{θ+λ}(y)/Ψ_θ(y)`: the windowed weighted mean of the residual
/// `∏ x_i^{-λ_i} - Ψ_{θ+λ}(y(n))/Ψ_θ(y(n))` must vanish.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalMomentReport {
    /// Windowed estimate of the moment.
    pub moment: Estimate,
    /// Windowed estimate of the predicted ratio.
    pub predicted: Estimate,
    /// Residual mean and its standard error.
    pub residual: Estimate,
    pub z_score: f64,
    pub bandwidth: f64,
}

pub fn conditional_moment_check(
    chain: &ChainSamples,
    theta: &[f64],
    lambda: &[f64],
    target: &[f64],
    bandwidth: f64,
    spec: &QuadratureSpec,
) -> Result<ConditionalMomentReport> {
    let n = theta.len();
    if lambda.len() != n {
        return Err(contract("λ has the wrong length"));
    }
    let shifted: Vec<f64> = theta.iter().zip(lambda).map(|(a, b)| a + b).collect();
    let mut num = Vec::new();
    let mut pred = Vec::new();
    let mut den = Vec::new();
    for s in &chain.states {
        let w = s.weight * bin_weight(s.state.shape(), target, bandwidth);
        if w < 1e-12 {
            continue;
        }
        let rows = s.state.log_rows();
        let mut prev = 0.0;
        let mut log_m = 0.0;
        for (k, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            log_m -= lambda[k] * (sum - prev);
            prev = sum;
        }
        let y = s.state.shape();
        let ratio = psi_real(&shifted, y, spec)? / psi_real(theta, y, spec)?;
        num.push(w * log_m.exp());
        pred.push(w * ratio);
        den.push(w);
    }
    if den.len() < 100 {
        return Err(Error::Contract(format!("only {} samples fall in the window", den.len())));
    }
    let moment = ratio_estimate(&num, &den);
    let predicted = ratio_estimate(&pred, &den);
    let resid: Vec<f64> = num.iter().zip(&pred).map(|(a, b)| a - b).collect();
    let residual = ratio_estimate(&resid, &den);
    let z_score = residual.mean / residual.std_error;
    Ok(ConditionalMomentReport { moment, predicted, residual, z_score, bandwidth })
}

/// `∫ P^N(y, dỹ)` by nested quadrature (`N ≤ 3`); below 1 for `N ≥ 2`.
pub fn p_total_mass(y: &[f64], ctx: &KernelContext) -> Result<QuadResult<f64>> {
    let n = ctx.size();
    if n > 3 {
        return Err(Error::Size("P mass quadrature is implemented for N ≤ 3".into()));
    }
    positive(y, "y")?;
    let f = |t: &[f64]| -> f64 {
        let yt: Vec<f64> = t.iter().map(|v| v.exp()).collect();
        p_log_density(y, &yt, ctx).map(|v| v.exp()).unwrap_or(0.0)
    };
    let guess: Vec<f64> = (1..=n).map(|j| y[j - 1].ln() + 1.0 / ctx.gamma(j)).collect();
    let mut opts = NestedOptions::new(guess);
    opts.rel_tol = 1e-9;
    nested(&f, &opts)
}

/// `∫ K_θ(y, dz)` over the top entry at `N = 2` by adaptive quadrature.
pub fn k_total_mass_n2(y: &[f64], theta: &[f64]) -> Result<f64> {
    if y.len() != 2 {
        return Err(Error::Size("N = 2 only".into()));
    }
    let (l1, l2) = (y[0].ln(), y[1].ln());
    let c = theta[1] - theta[0];
    let g = |v: f64| c * (v - l1) - (v - l1).exp() - (l2 - v).exp();
    let s = find_support(g, 0.5 * (l1 + l2), 45.0)?.ok_or_else(|| Error::Convergence("vanishing".into()))?;
    Ok(adaptive(|v| g(v).exp(), s.lo, s.hi, Tolerance::rel(1e-13)).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::stats::ks_test;
    use crate::whittaker::w_function;

    fn ctx2() -> KernelContext {
        KernelContext::new(SolvableParams::new(vec![1.0, 1.0, 1.0], vec![-0.6, -0.2]).unwrap(), 1).unwrap()
    }

    #[test]
    fn size_one_kernel_is_stochastic() {
        let ctx = KernelContext::new(SolvableParams::new(vec![1.3], vec![-0.4]).unwrap(), 1).unwrap();
        let m = p_total_mass(&[2.0], &ctx).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9, "{m:?}");
        let mut rng = RngStream::new(1, 0);
        assert_eq!(p_sample(&[2.0], &ctx, &mut rng).weight, 1.0);
    }

    #[test]
    fn size_two_kernel_is_substochastic_and_sampler_agrees() {
        let ctx = ctx2();
        let y = [1.0, 0.7];
        let m = p_total_mass(&y, &ctx).unwrap();
        assert!(m.value < 1.0 && m.value > 0.0);
        let w = replicate(2, "p-mass", 200_000, |rng| p_sample(&y, &ctx, rng).weight);
        let e = Estimate::from_samples(&w);
        assert!(e.covers(m.value, 4.0), "{e:?} vs {}", m.value);
        // The killing factor is exp(-ỹ₂/y₁) on top of the independent jumps.
        let yt = [1.4, 0.3];
        let a = p_log_density(&y, &yt, &ctx).unwrap();
        let b = jump_log_density(1.0, 1.4, ctx.gamma(1)) + jump_log_density(0.7, 0.3, ctx.gamma(2));
        assert!((a - b + 0.3).abs() < 1e-14);
    }

    #[test]
    fn small_negative_moment_of_killed_jump_is_finite() {
        // E[weight (ỹ₁ỹ₂)^{-σ}] by sampling against quadrature.
        let ctx = ctx2();
        let y = [1.0, 0.7];
        let sigma = 0.1;
        let f = |t: &[f64]| -> f64 {
            let yt = [t[0].exp(), t[1].exp()];
            (p_log_density(&y, &yt, &ctx).unwrap() - sigma * (t[0] + t[1])).exp()
        };
        let mut o = NestedOptions::new(vec![1.0, 1.0]);
        o.rel_tol = 1e-8;
        let q = nested(&f, &o).unwrap();
        let v = replicate(3, "moment", 200_000, |rng| {
            let s = p_sample(&y, &ctx, rng);
            s.weight * (s.state[0] * s.state[1]).powf(-sigma)
        });
        let e = Estimate::from_samples(&v);
        assert!(q.value.is_finite() && e.covers(q.value, 4.0), "{e:?} vs {}", q.value);
    }

    #[test]
    fn k_factorizes_into_lambda_terms_and_matches_pattern_integrand() {
        let theta = [-0.3, 0.2, -0.7];
        let z = TriangularArray::from_rows(3, 3, vec![vec![1.3], vec![2.0, 0.4], vec![0.9, 1.7, 0.25]]).unwrap();
        let y = z.shape().to_vec();
        let a = k_log_density(&y, &z, &theta).unwrap();
        let b = k_log_density_by_rows(&z, &theta).unwrap();
        assert!((a - b).abs() < 1e-13);
        let t: Vec<f64> = vec![z.log_get(1, 1), z.log_get(2, 1), z.log_get(2, 2)];
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let f = PatternIntegrand::real(&theta, &ly).re_value(&t);
        let shift: f64 = theta.iter().zip(&ly).map(|(a, b)| a * b).sum();
        assert!((a - f - shift).abs() < 1e-12);
        assert_eq!(k_log_density(&[1.0, 1.0, 1.0], &z, &theta).unwrap(), f64::NEG_INFINITY);
        let one = TriangularArray::from_rows(1, 1, vec![vec![2.0]]).unwrap();
        assert_eq!(k_density(&[2.0], &one, &[0.3]).unwrap(), 1.0);
    }

    #[test]
    fn k_mass_is_w_function() {
        let theta = [-0.6, -0.2];
        for y in [[1.0, 1.0], [0.3, 2.0], [4.0, 0.1]] {
            let a = k_total_mass_n2(&y, &theta).unwrap();
            let b = w_function(&theta, &y, &QuadratureSpec::default()).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn l_kernel_rows() {
        // k = 1 is the multiplicative jump.
        assert_eq!(l_push(&[], &[2.0], &[], 1.5).unwrap(), vec![3.0]);
        let x = [1.2, 0.5];
        let y = [2.0, 0.9, 0.3];
        let xt = [1.7, 0.8];
        let out = l_push(&x, &y, &xt, 0.6).unwrap();
        assert!((out[0] - 0.6 * (2.0 + 1.7)).abs() < 1e-15);
        let want_last = 0.3 * 0.9 * 0.8 / ((0.9 + 0.8) * 0.5);
        assert!((out[2] - want_last).abs() < 1e-15);
        let want_mid = 2.0 * 1.7 / 1.2 * (0.9 + 0.8) / (2.0 + 1.7);
        assert!((out[1] - want_mid).abs() < 1e-15);
        // Density normalizes over ỹ₁.
        let g = 1.3;
        let r = adaptive(
            |t: f64| {
                let mut yt = out.clone();
                yt[0] = t.exp();
                l_log_density(&x, &y, &xt, &yt, g).unwrap().exp()
            },
            -40.0,
            60.0,
            Tolerance::rel(1e-12),
        );
        assert!((r.value - 1.0).abs() < 1e-9);
        let mut bad = out.clone();
        bad[2] *= 1.01;
        assert_eq!(l_log_density(&x, &y, &xt, &bad, g).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn row_composition_matches_insertion() {
        let ctx = KernelContext::new(SolvableParams::new(vec![0.8], vec![0.3, 0.5, 0.9]).unwrap(), 1).unwrap();
        let z = TriangularArray::from_rows(3, 3, vec![vec![1.0], vec![2.0, 0.5], vec![3.0, 1.1, 0.2]]).unwrap();
        for r in 0..20 {
            let a = pi_step(&z, &ctx, &mut RngStream::new(9, r)).unwrap();
            let b = pi_step_by_rows(&z, &ctx, &mut RngStream::new(9, r)).unwrap();
            for k in 1..=3 {
                for l in 1..=k {
                    assert!((a.get(k, l) / b.get(k, l) - 1.0).abs() < 1e-13);
                }
            }
            // The top entry is a multiplicative random walk.
            let mut rng = RngStream::new(9, r);
            let d = sample_inverse_gamma(ctx.gamma(1), &mut rng);
            assert!((a.get(1, 1) - d * z.get(1, 1)).abs() < 1e-13);
        }
    }

    #[test]
    fn one_step_bottom_left_entry_matches_path_sum() {
        // From the empty array the first step sets z_{N,1} = ∏ d_{1,j};
        // starting from a full array, z_{3,1} after one insertion equals the
        // path sum through the old first diagonal.
        let ctx = KernelContext::new(SolvableParams::new(vec![0.7, 0.7], vec![0.6, 0.4, 0.8]).unwrap(), 2).unwrap();
        let z = TriangularArray::from_rows(3, 3, vec![vec![1.5], vec![2.0, 0.5], vec![3.0, 1.1, 0.2]]).unwrap();
        let n = 100_000;
        let a: Vec<f64> = replicate(4, "pi", n, |rng| pi_step(&z, &ctx, rng).unwrap().get(3, 1));
        // Brute force: z̃_{3,1} = d₃(z₃₁ + d₂(z₂₁ + d₁ z₁₁)).
        let b: Vec<f64> = replicate(5, "paths", n, |rng| {
            let d: Vec<f64> = (1..=3).map(|j| sample_inverse_gamma(ctx.gamma(j), rng)).collect();
            d[2] * (3.0 + d[1] * (2.0 + d[0] * 1.5))
        });
        let r = crate::specfun::stats::ks_two_sample(&a, &b).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn eigenvalue_one_at_theta_and_gamma_ratio_at_size_one() {
        let ctx = KernelContext::new(SolvableParams::new(vec![1.1], vec![-0.3]).unwrap(), 1).unwrap();
        let spec = QuadratureSpec::default();
        let r = eigenfunction_check(&[1.7], &ctx, &EigenMode::W, 100_000, 1, &spec).unwrap();
        assert!((r.eigenvalue_re - 1.0).abs() < 1e-15);
        assert!(r.z_score < 4.0, "{r:?}");
        let l = vec![Complex64::new(0.2, 0.0)];
        let r = eigenfunction_check(&[1.7], &ctx, &EigenMode::PsiRatio(l), 100_000, 2, &spec).unwrap();
        let want = (ln_gamma(1.1 + 0.2) - ln_gamma(1.1 - 0.3)).exp();
        assert!((r.eigenvalue_re - want).abs() < 1e-13);
        assert!(r.z_score < 4.0 && !r.inconclusive, "{r:?}");
    }

    #[test]
    fn two_row_check_constant_is_w() {
        let ctx = KernelContext::new(SolvableParams::new(vec![1.5], vec![-0.5, -0.2]).unwrap(), 1).unwrap();
        let y = [1.2, 0.8];
        let r = two_row_intertwining_check(&y, &ctx, &TwoRowTest::Constant).unwrap();
        let w = w_function(ctx.theta(), &y, &QuadratureSpec::default()).unwrap();
        assert!(r.rel_diff < 1e-6, "{r:?}");
        assert!((r.lhs / w - 1.0).abs() < 1e-6, "{} vs {w}", r.lhs);
    }

    #[test]
    fn kbar_importance_and_metropolis() {
        let theta = [-0.6, -0.2];
        let y = [1.0, 0.7];
        let batch = kbar_conditional_sampler(&y, &theta, 50_000, 7, KbarMethod::Importance).unwrap();
        assert!(batch.samples.iter().all(|s| s.state.shape() == y));
        let w = k_total_mass_n2(&y, &theta).unwrap();
        assert!(batch.normalization.covers(w, 3.0), "{:?} vs {w}", batch.normalization);
        assert!(batch.warning.is_none());
        let law = TopEntryLaw::new(&y, &theta).unwrap();
        let mut rng = RngStream::new(8, 0);
        let res = resample(&batch.samples, 5000, &mut rng);
        let z: Vec<f64> = res.iter().map(|a| a.get(1, 1)).collect();
        let r = ks_test(&z, |x| law.cdf(x)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
        let m = kbar_conditional_sampler(&y, &theta, 5000, 9, KbarMethod::Metropolis { burn_in: 1000, thin: 20, step: 2.0 })
            .unwrap();
        let z: Vec<f64> = m.samples.iter().map(|s| s.state.get(1, 1)).collect();
        let r = ks_test(&z, |x| law.cdf(x)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }
}
