//! Class-one GL(N,R)-Whittaker functions by recursive integration over the
//! rows of a triangular pattern.
//!
//! With `t = log z` and the bottom row pinned to `log y`,
//!
//! ```text
//! Ψ_λ(y) = ∫ exp F_λ(t) dt,
//! F_λ(t) = Σ_k λ_k (Σ_ℓ t_{k-1,ℓ} - Σ_ℓ t_{k,ℓ})
//!          - Σ_{ℓ ≤ k < N} (e^{t_{kℓ} - t_{k+1,ℓ}} + e^{t_{k+1,ℓ+1} - t_{kℓ}}).
//! ```
//!
//! `Re F` is strictly concave in the free coordinates and decays
//! doubly-exponentially in every direction, so each integration box is read
//! off from the maximizer and a profile walk.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, domain, Error, Result};
use crate::mc::{replicate, ComplexEstimate};
use crate::optimize::{cholesky, maximize, Concave, Maximum};
use crate::quad::{adaptive, nested, support_1d, GaussLegendre, NestedOptions, QuadResult, Tolerance, MAX_SPAN};
use crate::specfun::{sklyanin_density, try_ln_gamma_c, RngStream};

/// Spectral parameter `λ ∈ C^N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub lambda: Vec<Complex64>,
}

impl SpectralPoint {
    pub fn new(lambda: Vec<Complex64>) -> Self {
        SpectralPoint { lambda }
    }

    pub fn real(lambda: &[f64]) -> Self {
        SpectralPoint { lambda: lambda.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn imaginary(u: &[f64]) -> Self {
        SpectralPoint { lambda: u.iter().map(|&x| Complex64::new(0.0, x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn is_imaginary(&self) -> bool {
        self.lambda.iter().all(|z| z.re == 0.0)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.lambda.iter().map(|z| z.re).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

/// Quadrature settings for pattern integrals in log variables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Fixed boxes for the free pattern coordinates in row-major order
    /// (row 1, then row 2, ...). When absent, boxes come from the maximizer.
    pub boxes: Option<Vec<(f64, f64)>>,
    /// Minimum nodes per dimension.
    pub nodes: usize,
    /// Node density used when a box is wide.
    pub nodes_per_unit: f64,
    pub rule: Rule,
    /// Relative error target; missing it sets `converged = false`.
    pub tol: f64,
    /// Box depth below the peak, in nats.
    pub drop: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { boxes: None, nodes: 32, nodes_per_unit: 6.0, rule: Rule::GaussLegendre, tol: 1e-8, drop: 50.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(contract(format!("{} nodes per dimension; at least 8 are required", self.nodes)));
        }
        if let Some(b) = &self.boxes {
            if b.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return Err(contract("quadrature boxes must be finite and nonempty"));
            }
        }
        if !(self.nodes_per_unit >= 0.0 && self.tol > 0.0 && self.drop > 0.0) {
            return Err(contract("node density, tolerance and drop must be positive"));
        }
        Ok(())
    }

    fn rule_on(&self, lo: f64, hi: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
        let n = ((self.nodes as f64).max(self.nodes_per_unit * (hi - lo)) * scale).ceil().clamp(8.0, 4000.0) as usize;
        match self.rule {
            Rule::GaussLegendre => GaussLegendre::cached(n).scaled(lo, hi),
            Rule::Trapezoid => {
                let h = (hi - lo) / (n - 1) as f64;
                let x = (0..n).map(|i| lo + h * i as f64).collect();
                let mut w = vec![h; n];
                w[0] *= 0.5;
                w[n - 1] *= 0.5;
                (x, w)
            }
        }
    }
}

/// Number of free coordinates of a size-`n` pattern.
pub fn pattern_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Flat index of entry `(k, ℓ)` (1-based) in row-major order; the bottom row
/// follows the free coordinates.
pub fn pattern_index(k: usize, l: usize) -> usize {
    k * (k - 1) / 2 + l - 1
}

/// The pattern log-integrand `F_λ` with a pinned bottom row.
#[derive(Clone, Debug)]
pub struct PatternIntegrand {
    n: usize,
    bottom: Vec<f64>,
    coef: Vec<Complex64>,
    constant: Complex64,
    terms: Vec<(usize, usize)>,
}

impl PatternIntegrand {
    pub fn new(lambda: &[Complex64], log_y: &[f64]) -> Self {
        let n = lambda.len();
        assert_eq!(n, log_y.len(), "λ and y differ in length");
        let d = pattern_dim(n);
        let mut coef = vec![Complex64::new(0.0, 0.0); d];
        let mut terms = Vec::with_capacity(2 * d);
        for k in 1..n {
            for l in 1..=k {
                coef[pattern_index(k, l)] = lambda[k] - lambda[k - 1];
                terms.push((pattern_index(k, l), pattern_index(k + 1, l)));
                terms.push((pattern_index(k + 1, l + 1), pattern_index(k, l)));
            }
        }
        let constant = -lambda[n - 1] * log_y.iter().sum::<f64>();
        PatternIntegrand { n, bottom: log_y.to_vec(), coef, constant, terms }
    }

    pub fn real(theta: &[f64], log_y: &[f64]) -> Self {
        let l: Vec<Complex64> = theta.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(&l, log_y)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bottom(&self) -> &[f64] {
        &self.bottom
    }

    #[inline]
    fn coord(&self, free: &[f64], i: usize) -> f64 {
        if i < free.len() {
            free[i]
        } else {
            self.bottom[i - free.len()]
        }
    }

    fn exp_sum(&self, free: &[f64]) -> f64 {
        self.terms.iter().map(|&(a, b)| (self.coord(free, a) - self.coord(free, b)).exp()).sum()
    }

    /// `F_λ(t)` at the free coordinates `t`.
    pub fn log_value(&self, free: &[f64]) -> Complex64 {
        let lin: Complex64 = self.coef.iter().zip(free).map(|(c, t)| c * t).sum();
        lin + self.constant - self.exp_sum(free)
    }

    /// `Re F_λ(t)`.
    pub fn re_value(&self, free: &[f64]) -> f64 {
        let lin: f64 = self.coef.iter().zip(free).map(|(c, t)| c.re * t).sum();
        lin + self.constant.re - self.exp_sum(free)
    }

    /// Log-coordinates `log x_k = Σ_ℓ t_{kℓ} - Σ_ℓ t_{k-1,ℓ}`, `k = 1..N`.
    pub fn log_x(&self, free: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        let mut prev = 0.0;
        for k in 1..=self.n {
            let s: f64 = (1..=k).map(|l| self.coord(free, pattern_index(k, l))).sum();
            out.push(s - prev);
            prev = s;
        }
        out
    }

    /// Maximizer of `Re F`, started from the midpoints of the interlacing
    /// ranges.
    pub fn maximize(&self) -> Result<Maximum> {
        let d = pattern_dim(self.n);
        let mut x0 = vec![0.0; d];
        for k in 1..self.n {
            for l in 1..=k {
                x0[pattern_index(k, l)] = 0.5 * (self.bottom[l - 1] + self.bottom[l - 1 + self.n - k]);
            }
        }
        if d == 0 {
            return Ok(Maximum { x: vec![], value: self.re_value(&[]), gradient_norm: 0.0, iterations: 0 });
        }
        maximize(self, &x0, 1e-10, 200)
    }

    /// Profile interval of free coordinate `i`: where
    /// `max_{others} Re F ≥ max Re F - drop`.
    pub fn profile_box(&self, peak: &Maximum, i: usize, drop: f64) -> Result<(f64, f64)> {
        let d = peak.x.len();
        let threshold = peak.value - drop;
        let side = |dir: f64| -> Result<f64> {
            let mut others = peak.x.clone();
            let mut profile = |x: f64| -> Result<f64> {
                if d == 1 {
                    return Ok(self.re_value(&[x]));
                }
                others[i] = x;
                let r = Restricted { base: self, fixed: i, value: x };
                let start: Vec<f64> = others.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                let m = maximize(&r, &start, 1e-9, 200)?;
                let mut k = 0;
                for (j, o) in others.iter_mut().enumerate() {
                    if j != i {
                        *o = m.x[k];
                        k += 1;
                    }
                }
                Ok(m.value)
            };
            let mut s = 0.5;
            while profile(peak.x[i] + dir * s)? >= threshold {
                s *= 2.0;
                if s > MAX_SPAN {
                    return Err(Error::Convergence("pattern integrand does not decay".into()));
                }
            }
            let (mut inside, mut outside) = (s * 0.5, s);
            if s > 0.5 {
                for _ in 0..5 {
                    let mid = 0.5 * (inside + outside);
                    if profile(peak.x[i] + dir * mid)? >= threshold {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
            }
            Ok(peak.x[i] + dir * outside)
        };
        let hi = side(1.0)?;
        let lo = side(-1.0)?;
        Ok((lo, hi))
    }
}

impl Concave for PatternIntegrand {
    fn dim(&self) -> usize {
        pattern_dim(self.n)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.re_value(x)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let d = x.len();
        for (gi, c) in g.iter_mut().zip(&self.coef) {
            *gi = c.re;
        }
        for &(a, b) in &self.terms {
            let e = (self.coord(x, a) - self.coord(x, b)).exp();
            if a < d {
                g[a] -= e;
            }
            if b < d {
                g[b] += e;
            }
        }
    }

    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let d = x.len();
        h.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b) in &self.terms {
            let e = (self.coord(x, a) - self.coord(x, b)).exp();
            if a < d {
                h[a * d + a] -= e;
            }
            if b < d {
                h[b * d + b] -= e;
            }
            if a < d && b < d {
                h[a * d + b] += e;
                h[b * d + a] += e;
            }
        }
    }
}

/// `Re F` with one coordinate held fixed.
struct Restricted<'a> {
    base: &'a PatternIntegrand,
    fixed: usize,
    value: f64,
}

impl Restricted<'_> {
    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(x.len() + 1);
        full.extend_from_slice(&x[..self.fixed]);
        full.push(self.value);
        full.extend_from_slice(&x[self.fixed..]);
        full
    }
}

impl Concave for Restricted<'_> {
    fn dim(&self) -> usize {
        self.base.dim() - 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.re_value(&self.expand(x))
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let full = self.expand(x);
        let mut gf = vec![0.0; full.len()];
        self.base.gradient(&full, &mut gf);
        gf.remove(self.fixed);
        g.copy_from_slice(&gf);
    }

    fn hessian(&self, x: &[f64], h: &mut [f64]) {
        let full = self.expand(x);
        let d = full.len();
        let mut hf = vec![0.0; d * d];
        self.base.hessian(&full, &mut hf);
        let mut k = 0;
        for i in (0..d).filter(|&i| i != self.fixed) {
            for j in (0..d).filter(|&j| j != self.fixed) {
                h[k] = hf[i * d + j];
                k += 1;
            }
        }
    }
}

/// Value of a pattern integral with an error estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WhittakerValue {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// Largest size handled by quadrature.
pub const MAX_QUADRATURE_N: usize = 3;

fn check_point(lambda: &[Complex64], y: &[f64]) -> Result<Vec<f64>> {
    if lambda.is_empty() || lambda.len() != y.len() {
        return Err(contract(format!("λ has {} entries, y has {}", lambda.len(), y.len())));
    }
    if y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(domain("Whittaker functions need y_i > 0"));
    }
    Ok(y.iter().map(|v| v.ln()).collect())
}

/// One pass of the row recursion
/// `Ψ^N_λ(y) = ∫ exp(G(x, y)) Ψ^{N-1}_{λ_1..λ_{N-1}}(x) ∏ dx/x`,
/// with `G` collecting the terms of `F` that couple rows `N-1` and `N`.
fn psi_rec(lambda: &[Complex64], log_y: &[f64], spec: &QuadratureSpec, scale: f64) -> Result<Complex64> {
    let n = lambda.len();
    if n == 1 {
        return Ok((-lambda[0] * log_y[0]).exp());
    }
    let m = n - 1;
    let boxes: Vec<(f64, f64)> = match &spec.boxes {
        Some(b) => {
            let start = pattern_index(m, 1);
            if b.len() < start + m {
                return Err(contract(format!("{} boxes given, the pattern needs {}", b.len(), pattern_dim(n))));
            }
            b[start..start + m].to_vec()
        }
        None => {
            let f = PatternIntegrand::new(lambda, log_y);
            let peak = f.maximize()?;
            let start = pattern_index(m, 1);
            (start..start + m).map(|i| f.profile_box(&peak, i, spec.drop)).collect::<Result<_>>()?
        }
    };
    let rules: Vec<(Vec<f64>, Vec<f64>)> = boxes.iter().map(|&(lo, hi)| spec.rule_on(lo, hi, scale)).collect();
    let lam_n = lambda[m];
    let sum_y: f64 = log_y.iter().sum();
    let failure = RefCell::new(None);
    let mut idx = vec![0usize; m];
    let mut x = vec![0.0; m];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for k in 0..m {
            x[k] = rules[k].0[idx[k]];
            w *= rules[k].1[idx[k]];
        }
        let mut g = -lam_n * sum_y;
        for l in 0..m {
            g += lam_n * x[l];
            g -= (x[l] - log_y[l]).exp() + (log_y[l + 1] - x[l]).exp();
        }
        let gr = g.re;
        // Far tails contribute nothing measurable; skip the inner integral.
        if gr > -745.0 {
            match psi_rec(&lambda[..m], &x, spec, scale) {
                Ok(inner) => total += g.exp() * inner * w,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                }
            }
        }
        let mut k = m;
        loop {
            if k == 0 {
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                return Ok(total);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < rules[k].0.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `Ψ^N_λ(y)` by one recursive quadrature pass, without an error estimate.
/// Used inside other integrals.
pub fn psi(lambda: &[Complex64], y: &[f64], spec: &QuadratureSpec) -> Result<Complex64> {
    let log_y = check_point(lambda, y)?;
    if lambda.len() > MAX_QUADRATURE_N {
        return Err(Error::Size(format!(
            "quadrature handles N ≤ {MAX_QUADRATURE_N}; use the Monte Carlo evaluator for N = {}",
            lambda.len()
        )));
    }
    psi_rec(lambda, &log_y, spec, 1.0)
}

/// `Ψ^N_λ(y)` for real `λ`.
pub fn psi_real(theta: &[f64], y: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let l: Vec<Complex64> = theta.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(psi(&l, y, spec)?.re)
}

/// `w^N_θ(y) = ∏ y_i^{θ_i} Ψ^N_θ(y)`, the total mass of the pattern kernel.
pub fn w_function(theta: &[f64], y: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let p = psi_real(theta, y, spec)?;
    Ok(p * theta.iter().zip(y).map(|(t, v)| t * v.ln()).sum::<f64>().exp())
}

/// `Ψ^N_λ(y)` by recursive quadrature over the pattern rows, for
/// `N ≤ 3`. The error estimate compares against a pass with two thirds of
/// the nodes.
pub fn whittaker_eval(lambda: &SpectralPoint, y: &[f64], spec: &QuadratureSpec) -> Result<WhittakerValue> {
    spec.validate()?;
    let log_y = check_point(&lambda.lambda, y)?;
    if lambda.len() > MAX_QUADRATURE_N {
        return Err(Error::Size(format!(
            "quadrature handles N ≤ {MAX_QUADRATURE_N}; use the Monte Carlo evaluator for N = {}",
            lambda.len()
        )));
    }
    let fine = psi_rec(&lambda.lambda, &log_y, spec, 1.0)?;
    let coarse = psi_rec(&lambda.lambda, &log_y, spec, 2.0 / 3.0)?;
    let error = (fine - coarse).norm();
    let converged = error <= spec.tol * fine.norm().max(f64::MIN_POSITIVE);
    Ok(WhittakerValue { value: fine, error, converged })
}

/// Direct adaptive integration of `exp F_λ` over all `N(N-1)/2` free
/// coordinates at once. Independent of the row recursion; used to check it.
pub fn whittaker_direct(lambda: &SpectralPoint, y: &[f64], rel_tol: f64) -> Result<QuadResult<Complex64>> {
    let log_y = check_point(&lambda.lambda, y)?;
    let n = lambda.len();
    let f = PatternIntegrand::new(&lambda.lambda, &log_y);
    if n == 1 {
        return Ok(QuadResult { value: f.log_value(&[]).exp(), error: 0.0, evaluations: 1, converged: true });
    }
    let peak = f.maximize()?;
    let g = |t: &[f64]| f.log_value(t).exp();
    let mut opts = NestedOptions::new(peak.x.clone());
    opts.rel_tol = rel_tol;
    nested(&g, &opts)
}

/// Monte Carlo estimate of `Ψ^N_λ(y)` for any `N`: importance sampling
/// with a Gaussian fitted at the maximizer of `Re F`, covariance inflated
/// by 1.5² to cover the heavier side of each coordinate.
pub fn whittaker_mc(lambda: &SpectralPoint, y: &[f64], samples: usize, seed: u64) -> Result<ComplexEstimate> {
    let log_y = check_point(&lambda.lambda, y)?;
    let f = PatternIntegrand::new(&lambda.lambda, &log_y);
    let d = pattern_dim(lambda.len());
    if d == 0 {
        let v = f.log_value(&[]).exp();
        return Ok(ComplexEstimate::from_samples(&[v, v]));
    }
    let peak = f.maximize()?;
    let mut l = vec![0.0; d * d];
    f.hessian(&peak.x, &mut l);
    l.iter_mut().for_each(|v| *v = -*v);
    if !cholesky(&mut l, d) {
        return Err(Error::Convergence("Hessian at the maximizer is not negative definite".into()));
    }
    let kappa: f64 = 1.5;
    let log_norm = -0.5 * d as f64 * (2.0 * PI).ln() - d as f64 * kappa.ln()
        + (0..d).map(|i| l[i * d + i].ln()).sum::<f64>();
    let chunk = 1000;
    let chunks = samples.div_ceil(chunk);
    let parts = replicate(seed, "whittaker-mc", chunks, |rng: &mut RngStream| {
        let mut out = Vec::with_capacity(chunk);
        let mut z = vec![0.0; d];
        let mut t = vec![0.0; d];
        for _ in 0..chunk {
            for zi in z.iter_mut() {
                *zi = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            }
            // Solve Lᵀ u = z, then t = peak + κ u.
            for i in (0..d).rev() {
                let mut s = z[i];
                for k in i + 1..d {
                    s -= l[k * d + i] * t[k];
                }
                t[i] = s / l[i * d + i];
            }
            let q: f64 = log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>();
            let point: Vec<f64> = t.iter().zip(&peak.x).map(|(u, p)| p + kappa * u).collect();
            out.push((f.log_value(&point) - q).exp());
        }
        out
    });
    let all: Vec<Complex64> = parts.into_iter().flatten().take(samples).collect();
    Ok(ComplexEstimate::from_samples(&all))
}

/// Which form of the Bump–Stade identity to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BumpStadeForm {
    /// Weight `e^{-s y_1}`; needs `Re(-λ_i - ν_j) > 0`.
    Linear,
    /// Weight `e^{-s / y_N}`; needs `Re(λ_i + ν_j) > 0`.
    Reciprocal,
}

fn bump_stade_domain(lambda: &[Complex64], nu: &[Complex64], form: BumpStadeForm) -> Result<()> {
    if lambda.len() != nu.len() || lambda.is_empty() {
        return Err(contract("λ and ν must have the same positive length"));
    }
    for a in lambda {
        for b in nu {
            let r = match form {
                BumpStadeForm::Linear => -(a + b).re,
                BumpStadeForm::Reciprocal => (a + b).re,
            };
            if !(r > 0.0) {
                return Err(domain(format!("Bump–Stade integral diverges: λ+ν has real part {}", (a + b).re)));
            }
        }
    }
    Ok(())
}

/// Closed form `s^{Σ(λ+ν)} ∏ Γ(-λ_i-ν_j)` (linear form) or
/// `s^{-Σ(λ+ν)} ∏ Γ(λ_i+ν_j)` (reciprocal form).
pub fn bump_stade_rhs(s: f64, lambda: &[Complex64], nu: &[Complex64], form: BumpStadeForm) -> Result<Complex64> {
    if !(s > 0.0) {
        return Err(domain("s must be positive"));
    }
    if lambda.len() != nu.len() {
        return Err(contract("λ and ν must have the same length"));
    }
    let sign = match form {
        BumpStadeForm::Linear => -1.0,
        BumpStadeForm::Reciprocal => 1.0,
    };
    let total: Complex64 = lambda.iter().chain(nu).sum();
    let mut log = -sign * total * s.ln();
    for a in lambda {
        for b in nu {
            log += try_ln_gamma_c((a + b) * sign)?;
        }
    }
    Ok(log.exp())
}

/// `∫ e^{-s y_1} Ψ_λ Ψ_ν ∏ dy/y` (or the `e^{-s/y_N}` variant) by adaptive
/// quadrature in `log y`, with `Ψ` from the row recursion. `N ≤ 2`.
pub fn bump_stade_lhs(
    s: f64,
    lambda: &[Complex64],
    nu: &[Complex64],
    form: BumpStadeForm,
    spec: &QuadratureSpec,
) -> Result<QuadResult<Complex64>> {
    if !(s > 0.0) {
        return Err(domain("s must be positive"));
    }
    bump_stade_domain(lambda, nu, form)?;
    let n = lambda.len();
    if n > 2 {
        return Err(Error::Size(format!("the Bump–Stade integral is implemented for N ≤ 2, got {n}")));
    }
    let failure = RefCell::new(None);
    let integrand = |t: &[f64]| -> Complex64 {
        let y: Vec<f64> = t.iter().map(|v| v.exp()).collect();
        let weight = match form {
            BumpStadeForm::Linear => -s * y[0],
            BumpStadeForm::Reciprocal => -s / y[n - 1],
        };
        if weight < -745.0 {
            return Complex64::new(0.0, 0.0);
        }
        match (psi(lambda, &y, spec), psi(nu, &y, spec)) {
            (Ok(a), Ok(b)) => a * b * weight.exp(),
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let mut opts = NestedOptions::new(vec![0.0; n]);
    opts.rel_tol = 1e-9;
    opts.drop = 45.0;
    let r = nested(&integrand, &opts)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r)
}

/// Test function `A exp(-|log y - c|² / (2 w²))` on `(0,∞)^N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogGaussianBump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl LogGaussianBump {
    pub fn new(center: Vec<f64>, width: f64) -> Self {
        LogGaussianBump { center, width, amplitude: 1.0 }
    }

    /// Value at log-coordinates `t`.
    pub fn at_log(&self, t: &[f64]) -> f64 {
        let r2: f64 = t.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Both sides of the Plancherel identity and their difference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PlancherelResult {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub diff: f64,
    /// Sum of the quadrature error estimates of both sides.
    pub error: f64,
}

/// `∫ f ḡ ∏dy/y` against `∫ f̂ conj(ĝ) s_N(λ) dλ` over `iR^N`, `N ≤ 2`.
///
/// For `N = 2` the bumps are isotropic in log variables, so they factor in
/// `s = t₁+t₂` and `r = t₂-t₁`. Homogeneity `Ψ_λ(cy) = c^{-Σλ} Ψ_λ(y)` then
/// splits `f̂` into a Fourier integral in `s` times an integral of
/// `Ψ_λ(e^{-r/2}, e^{r/2})` in `r`, which depends on `λ₁-λ₂` only.
pub fn plancherel_check(f: &LogGaussianBump, g: &LogGaussianBump, spec: &QuadratureSpec) -> Result<PlancherelResult> {
    let n = f.center.len();
    if g.center.len() != n || n == 0 {
        return Err(contract("bumps must live in the same positive dimension"));
    }
    if n > 2 {
        return Err(Error::Size(format!("the Plancherel check is implemented for N ≤ 2, got {n}")));
    }
    if !(f.width > 0.0 && g.width > 0.0) {
        return Err(domain("bump widths must be positive"));
    }
    let tol = Tolerance { abs: 0.0, rel: 1e-11, max_pieces: 2000 };
    // Left side.
    let prod = |t: &[f64]| f.at_log(t) * g.at_log(t);
    let mut opts = NestedOptions::new(f.center.iter().zip(&g.center).map(|(a, b)| 0.5 * (a + b)).collect());
    opts.rel_tol = 1e-11;
    let lhs = nested(&prod, &opts)?;
    // Fourier integral of a centered-at-c Gaussian profile exp(-(x-c)²/(2σ²)).
    let fourier = |c: f64, sigma: f64, k: f64| -> QuadResult<Complex64> {
        let half = (2.0 * 40.0f64).sqrt() * sigma;
        adaptive(
            |x: f64| Complex64::from_polar((-(x - c).powi(2) / (2.0 * sigma * sigma)).exp(), -k * x),
            c - half,
            c + half,
            tol,
        )
    };
    let spread2 = f.width.powi(2) + g.width.powi(2);
    let (rhs, rhs_err) = if n == 1 {
        let range = (4.0 * 40.0 / spread2).sqrt();
        let mut err = 0.0;
        let r = adaptive(
            |u: f64| {
                let a = fourier(f.center[0], f.width, u);
                let b = fourier(g.center[0], g.width, u);
                err += (a.error + b.error) * a.value.norm().max(b.value.norm());
                let s = sklyanin_density(&[Complex64::new(0.0, u)]) * Complex64::i();
                a.value * f.amplitude * (b.value * g.amplitude).conj() * s
            },
            -range,
            range,
            tol,
        );
        (r.value, r.error + err)
    } else {
        // Center of mass: f = A·exp(-(s-s₀)²/(4w²))·exp(-(r-r₀)²/(4w²)).
        let (sf, rf) = (f.center[0] + f.center[1], f.center[1] - f.center[0]);
        let (sg, rg) = (g.center[0] + g.center[1], g.center[1] - g.center[0]);
        let sig_f = 2f64.sqrt() * f.width;
        let sig_g = 2f64.sqrt() * g.width;
        let range_s = (40.0 / spread2).sqrt() * 2.0;
        let s_part = adaptive(
            |sigma: f64| fourier(sf, sig_f, sigma).value * fourier(sg, sig_g, sigma).value.conj(),
            -range_s,
            range_s,
            tol,
        );
        let failure = RefCell::new(None);
        let radial = |c: f64, sig: f64, v: f64| -> Complex64 {
            let half = (2.0 * 40.0f64).sqrt() * sig;
            let lam = [Complex64::new(0.0, 0.5 * v), Complex64::new(0.0, -0.5 * v)];
            adaptive(
                |r: f64| {
                    let weight = (-(r - c).powi(2) / (2.0 * sig * sig)).exp();
                    match psi(&lam, &[(-0.5 * r).exp(), (0.5 * r).exp()], spec) {
                        Ok(p) => p * weight,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            Complex64::new(0.0, 0.0)
                        }
                    }
                },
                c - half,
                c + half,
                Tolerance { abs: 0.0, rel: 1e-10, max_pieces: 500 },
            )
            .value
        };
        // |f̂ ĝ| decays like exp(-(w_f² + w_g²) v²/4).
        let range_v = (4.0 * 40.0 / spread2).sqrt();
        let v_part = adaptive(
            |v: f64| {
                let s2 = sklyanin_density(&[Complex64::new(0.0, 0.5 * v), Complex64::new(0.0, -0.5 * v)]);
                radial(rf, sig_f, v) * radial(rg, sig_g, v).conj() * s2 * Complex64::new(-1.0, 0.0)
            },
            -range_v,
            range_v,
            Tolerance { abs: 0.0, rel: 1e-8, max_pieces: 500 },
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let scale = 0.25 * f.amplitude * g.amplitude;
        (
            s_part.value * v_part.value * scale,
            (s_part.error * v_part.value.norm() + v_part.error * s_part.value.norm()) * scale,
        )
    };
    let lhs_c = Complex64::new(lhs.value, 0.0);
    Ok(PlancherelResult { lhs: lhs_c, rhs, diff: (lhs_c - rhs).norm(), error: lhs.error + rhs_err })
}

/// Peak of a one-dimensional log-integrand, exposed for callers that build
/// their own boxes.
pub fn log_support(logf: impl FnMut(f64) -> f64, guess: f64, drop: f64) -> Result<(f64, f64)> {
    let s = support_1d(logf, guess, drop)?;
    Ok((s.lo, s.hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// `Ψ_{(λ₁,λ₂)}(y) = 2 (y₁y₂)^{-(λ₁+λ₂)/2} K_{λ₁-λ₂}(2 √(y₂/y₁))`.
    fn bessel_oracle(l: &[Complex64], y: &[f64]) -> Complex64 {
        let pre = (-(l[0] + l[1]) * 0.5 * (y[0] * y[1]).ln()).exp();
        pre * bessel_k(l[0] - l[1], 2.0 * (y[1] / y[0]).sqrt()) * 2.0
    }

    #[test]
    fn size_one_is_a_power() {
        let v = whittaker_eval(&SpectralPoint::new(vec![Complex64::new(0.3, 1.2)]), &[2.5], &Default::default())
            .unwrap();
        let want = (Complex64::new(-0.3, -1.2) * 2.5f64.ln()).exp();
        assert!((v.value - want).norm() < 1e-15);
    }

    #[test]
    fn size_two_matches_adaptive_and_bessel() {
        let spec = QuadratureSpec::default();
        let cases: [(Vec<Complex64>, [f64; 2]); 4] = [
            (vec![c(0.3), c(-0.4)], [1.0, 1.0]),
            (vec![c(-0.7), c(0.2)], [0.3, 4.0]),
            (vec![Complex64::new(0.1, 2.0), Complex64::new(-0.2, -1.5)], [2.0, 0.5]),
            (vec![c(1.5), c(1.5)], [5.0, 0.05]),
        ];
        for (l, y) in cases {
            let v = whittaker_eval(&SpectralPoint::new(l.clone()), &y, &spec).unwrap();
            // Independent 1-d adaptive integral of the size-two kernel.
            let pre = (-l[0] * y[0].ln() - l[1] * y[1].ln()).exp();
            let r = adaptive(
                |t: f64| {
                    let x = t.exp();
                    ((l[1] - l[0]) * (t - y[0].ln())).exp() * (-x / y[0] - y[1] / x).exp()
                },
                -60.0,
                60.0,
                Tolerance::rel(1e-13),
            );
            let direct = pre * r.value;
            assert!(rel(v.value, direct) < 1e-8, "{l:?} {y:?}: {} vs {direct}", v.value);
            assert!(rel(v.value, bessel_oracle(&l, &y)) < 1e-8);
            assert!(v.converged, "{v:?}");
        }
    }

    #[test]
    fn reflection_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let spec = QuadratureSpec::default();
        for n in [2usize, 3] {
            for _ in 0..3 {
                let th: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
                let neg: Vec<f64> = th.iter().map(|t| -t).collect();
                let yr: Vec<f64> = y.iter().rev().map(|v| 1.0 / v).collect();
                let a = psi_real(&th, &y, &spec).unwrap();
                let b = psi_real(&neg, &yr, &spec).unwrap();
                assert!((a / b - 1.0).abs() < 1e-6, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn permutation_symmetry_and_positivity() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let spec = QuadratureSpec::default();
        for n in [2usize, 3] {
            for _ in 0..2 {
                let th: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
                let base = psi_real(&th, &y, &spec).unwrap();
                assert!(base > 0.0);
                let mut perm = th.clone();
                perm.reverse();
                perm.rotate_left(1);
                let other = psi_real(&perm, &y, &spec).unwrap();
                assert!((other / base - 1.0).abs() < 1e-8, "n={n}: {base} vs {other}");
            }
        }
    }

    #[test]
    fn recursion_agrees_with_direct_integral() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let th: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(0.3..3.0)).collect();
            let p = SpectralPoint::real(&th);
            let rec = whittaker_eval(&p, &y, &QuadratureSpec::default()).unwrap();
            let dir = whittaker_direct(&p, &y, 1e-8).unwrap();
            assert!(rel(rec.value, dir.value) < 1e-5, "{} vs {}", rec.value, dir.value);
        }
    }

    #[test]
    fn monte_carlo_fallback_agrees() {
        let p = SpectralPoint::real(&[0.2, -0.3, 0.4]);
        let y = [0.8, 1.5, 1.1];
        let q = whittaker_eval(&p, &y, &QuadratureSpec::default()).unwrap().value;
        let mc = whittaker_mc(&p, &y, 40_000, 1).unwrap();
        assert!((mc.re.mean - q.re).abs() < 4.0 * mc.re.std_error, "{mc:?} vs {q}");
        let big = SpectralPoint::real(&[0.0; 4]);
        assert!(matches!(whittaker_eval(&big, &[1.0; 4], &QuadratureSpec::default()), Err(Error::Size(_))));
    }

    #[test]
    fn bump_stade_size_one_and_two() {
        let spec = QuadratureSpec::default();
        let l1 = [c(-0.3)];
        let n1 = [c(-0.5)];
        for s in [1.0, 2.5] {
            let lhs = bump_stade_lhs(s, &l1, &n1, BumpStadeForm::Linear, &spec).unwrap();
            let rhs = bump_stade_rhs(s, &l1, &n1, BumpStadeForm::Linear).unwrap();
            assert!(rel(lhs.value, rhs) < 1e-8);
        }
        let l = [c(-0.3), c(-0.6)];
        let nu = [c(-0.4), c(-0.2)];
        let lhs = bump_stade_lhs(1.0, &l, &nu, BumpStadeForm::Linear, &spec).unwrap();
        let rhs = bump_stade_rhs(1.0, &l, &nu, BumpStadeForm::Linear).unwrap();
        assert!(rel(lhs.value, rhs) < 1e-6, "{} vs {rhs}", lhs.value);
        let lhs2 = bump_stade_lhs(2.0, &l, &nu, BumpStadeForm::Linear, &spec).unwrap();
        let total: f64 = -1.5;
        assert!(rel(lhs2.value / lhs.value, c(2f64.powf(total))) < 1e-6);
        let lp: Vec<Complex64> = l.iter().map(|z| -z).collect();
        let np: Vec<Complex64> = nu.iter().map(|z| -z).collect();
        let rec = bump_stade_lhs(1.0, &lp, &np, BumpStadeForm::Reciprocal, &spec).unwrap();
        assert!(rel(rec.value, bump_stade_rhs(1.0, &lp, &np, BumpStadeForm::Reciprocal).unwrap()) < 1e-6);
        assert!(bump_stade_lhs(1.0, &lp, &np, BumpStadeForm::Linear, &spec).is_err());
    }

    #[test]
    fn plancherel_size_one() {
        let f = LogGaussianBump::new(vec![0.4], 0.8);
        let r = plancherel_check(&f, &f, &QuadratureSpec::default()).unwrap();
        let closed = 0.8 * PI.sqrt();
        assert!((r.lhs.re - closed).abs() < 1e-10);
        assert!(r.diff < 1e-6 * closed, "{r:?}");
        assert!(r.lhs.re > 0.0);
    }

    #[test]
    fn plancherel_size_two() {
        let f = LogGaussianBump::new(vec![0.3, -0.2], 1.0);
        let r = plancherel_check(&f, &f, &QuadratureSpec::default()).unwrap();
        assert!((r.lhs.re - PI).abs() < 1e-9);
        assert!(r.diff < 1e-3 * r.lhs.re, "{r:?}");
    }
}
