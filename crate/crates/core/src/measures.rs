//! Whittaker measures: Mellin–Barnes contour formulas for the shape
//! density and the Laplace transform of the partition function, the `n = N`
//! closed form, and the concave optimization behind the entrance law.
//!
//! Contours run along `Re λ = c` (default `c = 0`) in the gauge
//! `θ_j < 0 < θ̂_m`, where no pole of `Γ(λ_i - θ_j)` or `Γ(λ_i + θ̂_m)` lies
//! on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, domain, Error, Result};
use crate::mc::{replicate, Estimate};
use crate::optimize::{maximize, Concave};
use crate::quad::{adaptive, find_support, nested, NestedOptions, QuadResult, Tolerance};
use crate::rsk::{TriangularArray, WeightMatrix};
use crate::specfun::stats::{ks_test, KsResult};
use crate::specfun::{
    bessel_k, inverse_gamma_cdf, ln_gamma, ln_gamma_c, sample_inverse_gamma, RngStream, SolvableParams,
};
use crate::whittaker::{pattern_dim, pattern_index, psi, psi_real, PatternIntegrand, QuadratureSpec};

/// Uniform trapezoid grid on the vertical lines `λ_i = c + i u_i`,
/// `|u_i| ≤ T`. Unset fields are chosen from the pole distance and the
/// decay of the integrand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourSpec {
    pub half_width: Option<f64>,
    pub step: Option<f64>,
    /// Real part `c` of every contour line.
    pub shift: f64,
    /// Target relative size of both the discretization and truncation errors.
    pub tail: f64,
    /// Cap on nodes per coordinate.
    pub max_nodes: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { half_width: None, step: None, shift: 0.0, tail: 1e-10, max_nodes: 2401 }
    }
}

/// A contour integral with its diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourValue {
    pub value: f64,
    /// Imaginary part left over by the conjugation symmetry.
    pub imag_residue: f64,
    /// Upper bound on the contribution from `|Im λ_i| > T`.
    pub tail_bound: f64,
    pub half_width: f64,
    pub step: f64,
    pub nodes_per_axis: usize,
}

/// `log |s_N(λ) dλ / du|` on a common vertical line: differences are
/// purely imaginary, and `1/(Γ(iv)Γ(-iv)) = v sinh(πv)/π`.
fn log_sklyanin_line(u: &[f64]) -> f64 {
    let n = u.len();
    let mut s = -(n as f64) * (2.0 * PI).ln() - ln_gamma(n as f64 + 1.0);
    for j in 0..n {
        for k in j + 1..n {
            let v = (u[j] - u[k]).abs();
            if v == 0.0 {
                return f64::NEG_INFINITY;
            }
            // log(v sinh(πv)/π), stable for large v.
            s += v.ln() + PI * v + (-(-2.0 * PI * v).exp_m1()).ln() - (2.0 * PI).ln();
        }
    }
    s
}

/// Trapezoid sum over the symmetric grid, using the symmetry of the
/// integrand under permutations of `u` (only ordered tuples are visited).
fn contour_sum(
    n: usize,
    step: f64,
    half_width: f64,
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
) -> (Complex64, f64, usize) {
    use rayon::prelude::*;
    let m = (half_width / step).round() as i64;
    let nodes = (2 * m + 1) as usize;
    let u = |i: i64| i as f64 * step;
    let (total, boundary) = match n {
        1 => {
            let vals: Vec<Complex64> = (-m..=m).into_par_iter().map(|i| f(&[u(i)])).collect();
            let total: Complex64 = vals.iter().sum::<Complex64>() * step;
            (total, vals[0].norm() + vals[nodes - 1].norm())
        }
        2 => {
            // Strictly ordered pairs i < j count twice; the diagonal vanishes.
            let rows: Vec<(Complex64, f64)> = (-m..=m)
                .into_par_iter()
                .map(|i| {
                    let mut s = Complex64::new(0.0, 0.0);
                    let mut b = 0.0;
                    for j in i + 1..=m {
                        let v = f(&[u(i), u(j)]);
                        s += v;
                        if i == -m || j == m {
                            b += 2.0 * v.norm();
                        }
                    }
                    (s, b)
                })
                .collect();
            let total: Complex64 = rows.iter().map(|r| r.0).sum::<Complex64>() * (2.0 * step * step);
            (total, rows.iter().map(|r| r.1).sum::<f64>() * step)
        }
        _ => unreachable!("contour quadrature is restricted to N ≤ 2"),
    };
    (total, boundary, nodes)
}

/// Resolves the grid: step from the nearest pole distance `d`
/// (trapezoid error `~ e^{-2πd/h}` times the growth `e^{d·osc}` of the
/// oscillating factor across the strip), half-width from the decay `rate`
/// per unit `|u|` with a margin for polynomial factors.
fn resolve_grid(spec: &ContourSpec, pole_distance: f64, osc: f64, rate: f64) -> Result<(f64, f64)> {
    if !(spec.tail > 0.0 && spec.tail < 1.0) {
        return Err(contract("tail target must lie in (0, 1)"));
    }
    let lt = -spec.tail.ln();
    let step = spec.step.unwrap_or(2.0 * PI * pole_distance / (lt + 2.0 + pole_distance * osc));
    let half_width = spec.half_width.unwrap_or_else(|| {
        let t = (lt + 5.0) / rate;
        t + 4.0 * t.max(1.0).ln() / rate
    });
    if !(step > 0.0 && half_width > 0.0) {
        return Err(contract("contour step and half-width must be positive"));
    }
    let nodes = 2.0 * half_width / step + 1.0;
    if nodes > spec.max_nodes as f64 {
        // Keep the half-width and coarsen the step to the cap.
        return Ok((2.0 * half_width / (spec.max_nodes as f64 - 1.0), half_width));
    }
    Ok((step, half_width))
}

fn check_contour_params(params: &SolvableParams, n: usize, shift: f64) -> Result<()> {
    let big_n = params.size();
    if big_n == 0 {
        return Err(contract("empty parameter set"));
    }
    if n < big_n {
        return Err(contract(format!(
            "the contour formula needs n ≥ N (got n = {n}, N = {big_n}); transpose the parameters \
             and swap the roles of n and N"
        )));
    }
    if big_n > 2 {
        return Err(Error::Size("contour quadrature is implemented for N ≤ 2".into()));
    }
    params.validate(n)?;
    if params.theta.iter().any(|t| *t >= shift) || params.theta_hat[..n].iter().any(|t| *t + shift <= 0.0) {
        return Err(contract("the contour must separate the poles: need θ_j < c < θ̂_m + c with c the shift"));
    }
    Ok(())
}

/// `N = 2` Whittaker function from its Bessel closed form.
fn psi_n2(lambda: &[Complex64], y: &[f64]) -> Complex64 {
    let x = 2.0 * (y[1] / y[0]).sqrt();
    let pre = (-(lambda[0] + lambda[1]) * 0.5 * (y[0] * y[1]).ln()).exp();
    pre * bessel_k(lambda[0] - lambda[1], x) * 2.0
}

fn psi_any(lambda: &[Complex64], y: &[f64]) -> Result<Complex64> {
    match lambda.len() {
        1 => Ok((-lambda[0] * y[0].ln()).exp()),
        2 => Ok(psi_n2(lambda, y)),
        _ => psi(lambda, y, &QuadratureSpec::default()),
    }
}

/// Density of the shape law `μ_n^N` at `y` with respect to `∏ dy_i/y_i`:
/// `Ψ_θ(y) ∫ s_N(λ) Ψ_{-λ}(y) ∏_{m,i} Γ(θ̂_m+λ_i)/Γ(θ_i+θ̂_m) dλ`.
pub fn mu_density_contour(y: &[f64], n: usize, params: &SolvableParams, spec: &ContourSpec) -> Result<ContourValue> {
    let big_n = params.size();
    check_contour_params(params, n, spec.shift)?;
    if y.len() != big_n || y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(domain("y must be a positive vector of length N"));
    }
    let th = &params.theta;
    let th_hat = &params.theta_hat[..n];
    let norm: f64 = th_hat.iter().map(|h| th.iter().map(|t| ln_gamma(h + t)).sum::<f64>()).sum();
    let psi_theta = psi_any(&th.iter().map(|t| Complex64::new(*t, 0.0)).collect::<Vec<_>>(), y)?.re;
    let c = spec.shift;
    let integrand = |u: &[f64]| -> Complex64 {
        let lambda: Vec<Complex64> = u.iter().map(|v| Complex64::new(c, *v)).collect();
        let mut log_g = Complex64::new(log_sklyanin_line(u) - norm, 0.0);
        if !log_g.re.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        for h in th_hat {
            for l in &lambda {
                log_g += ln_gamma_c(l + h);
            }
        }
        let neg: Vec<Complex64> = lambda.iter().map(|l| -l).collect();
        psi_any(&neg, y).map(|p| p * log_g.exp()).unwrap_or(Complex64::new(0.0, 0.0))
    };
    let d = th_hat.iter().map(|h| h + c).fold(f64::INFINITY, f64::min);
    let rate = PI * (n as f64 - big_n as f64 + 1.0) / 2.0;
    let osc: f64 = y.iter().map(|v| v.ln().abs()).sum();
    let (step, half_width) = resolve_grid(spec, d, osc, rate)?;
    let (total, boundary, nodes) = contour_sum(big_n, step, half_width, &integrand);
    let v = total * psi_theta;
    Ok(ContourValue {
        value: v.re,
        imag_residue: v.im,
        tail_bound: 4.0 * boundary * psi_theta.abs() / rate,
        half_width,
        step,
        nodes_per_axis: nodes,
    })
}

/// Laplace transform `E[exp(-s z_{N,1}(n))]` from the Mellin–Barnes formula
/// `∫ s^{Σ(θ_i-λ_i)} ∏_{i,j} Γ(λ_i-θ_j) ∏_{m,i} Γ(λ_i+θ̂_m)/Γ(θ_i+θ̂_m) s_N(λ) dλ`.
pub fn laplace_contour(s: f64, n: usize, params: &SolvableParams, spec: &ContourSpec) -> Result<ContourValue> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(domain("s must be positive"));
    }
    let big_n = params.size();
    check_contour_params(params, n, spec.shift)?;
    let th = &params.theta;
    let th_hat = &params.theta_hat[..n];
    let norm: f64 = th_hat.iter().map(|h| th.iter().map(|t| ln_gamma(h + t)).sum::<f64>()).sum();
    let c = spec.shift;
    let ls = s.ln();
    let sum_theta: f64 = th.iter().sum();
    let integrand = |u: &[f64]| -> Complex64 {
        let mut log_g = Complex64::new(log_sklyanin_line(u) - norm, 0.0);
        if !log_g.re.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        let mut sum_l = Complex64::new(0.0, 0.0);
        for v in u {
            let l = Complex64::new(c, *v);
            sum_l += l;
            for t in th {
                log_g += ln_gamma_c(l - t);
            }
            for h in th_hat {
                log_g += ln_gamma_c(l + h);
            }
        }
        log_g += (Complex64::new(sum_theta, 0.0) - sum_l) * ls;
        log_g.exp()
    };
    let d = th
        .iter()
        .map(|t| c - t)
        .chain(th_hat.iter().map(|h| h + c))
        .fold(f64::INFINITY, f64::min);
    let rate = PI * (n as f64 + big_n as f64) / 2.0 - PI * (big_n as f64 - 1.0);
    let (step, half_width) = resolve_grid(spec, d, big_n as f64 * ls.abs(), rate)?;
    let (total, boundary, nodes) = contour_sum(big_n, step, half_width, &integrand);
    Ok(ContourValue {
        value: total.re,
        imag_residue: total.im,
        tail_bound: 4.0 * boundary / rate,
        half_width,
        step,
        nodes_per_axis: nodes,
    })
}

/// `E[exp(-s d)]` for `d ∼ Γ^{-1}(γ)`: `(2/Γ(γ)) s^{γ/2} K_γ(2√s)`.
pub fn inverse_gamma_laplace(s: f64, gamma: f64) -> f64 {
    2.0 * (-ln_gamma(gamma) + 0.5 * gamma * s.ln()).exp() * bessel_k(Complex64::new(gamma, 0.0), 2.0 * s.sqrt()).re
}

/// Draws an `n × N` inverse-gamma weight matrix with parameters `γ_{mj}`.
pub fn sample_weights(params: &SolvableParams, n: usize, rng: &mut RngStream) -> Result<WeightMatrix> {
    let big_n = params.size();
    let mut data = Vec::with_capacity(n * big_n);
    for m in 1..=n {
        for j in 1..=big_n {
            data.push(sample_inverse_gamma(params.gamma(m, j), rng));
        }
    }
    WeightMatrix::new(n, big_n, data)
}

/// Point-to-point partition function `Σ_π ∏ d` over up-right paths from
/// `(1, 1)` to `(n, N)`.
pub fn partition_function(d: &WeightMatrix) -> f64 {
    let big_n = d.cols();
    let mut z = vec![0.0; big_n];
    for i in 0..d.rows() {
        let row = d.row(i);
        let mut left = 0.0;
        for j in 0..big_n {
            let up = if i == 0 && j == 0 { 1.0 } else { z[j] };
            z[j] = row[j] * (up + left);
            left = z[j];
        }
    }
    z[big_n - 1]
}

/// Monte Carlo `E[exp(-s z_{N,1}(n))]`.
pub fn laplace_mc(s: f64, n: usize, params: &SolvableParams, replicas: usize, seed: u64) -> Result<Estimate> {
    params.validate(n)?;
    let v = replicate(seed, "laplace-mc", replicas, |rng| {
        sample_weights(params, n, rng).map(|d| (-s * partition_function(&d)).exp())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&v))
}

/// Closed-form shape density at `n = N` with respect to `∏ dy_i/y_i`:
/// `∏ Γ(θ_i+θ̂_m)^{-1} e^{-1/y_N} Ψ_θ(y) Ψ_θ̂(y)`.
pub fn mu_nn_density(y: &[f64], params: &SolvableParams, spec: &QuadratureSpec) -> Result<f64> {
    let big_n = params.size();
    if big_n > 3 {
        return Err(Error::Size("the n = N density is evaluated for N ≤ 3".into()));
    }
    params.validate(big_n)?;
    if y.len() != big_n || y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(domain("y must be a positive vector of length N"));
    }
    let th_hat = &params.theta_hat[..big_n];
    let norm: f64 = th_hat.iter().map(|h| params.theta.iter().map(|t| ln_gamma(h + t)).sum::<f64>()).sum();
    let a = psi_real(&params.theta, y, spec)?;
    let b = psi_real(th_hat, y, spec)?;
    Ok((-norm - 1.0 / y[big_n - 1]).exp() * a * b)
}

/// `∫ μ_N^N` over `(0,∞)^N` in log variables (`N ≤ 2`).
pub fn mu_nn_total_mass(params: &SolvableParams, rel_tol: f64) -> Result<QuadResult<f64>> {
    let big_n = params.size();
    if big_n > 2 {
        return Err(Error::Size("the normalization quadrature is implemented for N ≤ 2".into()));
    }
    params.validate(big_n)?;
    let spec = QuadratureSpec::default();
    let th: Vec<Complex64> = params.theta.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let th_hat: Vec<Complex64> = params.theta_hat[..big_n].iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let norm: f64 =
        params.theta_hat[..big_n].iter().map(|h| params.theta.iter().map(|t| ln_gamma(h + t)).sum::<f64>()).sum();
    let f = |t: &[f64]| -> f64 {
        let y: Vec<f64> = t.iter().map(|v| v.exp()).collect();
        if big_n == 1 {
            return mu_nn_density(&y, params, &spec).unwrap_or(0.0);
        }
        let v = (psi_n2(&th, &y) * psi_n2(&th_hat, &y)).re;
        (-norm - 1.0 / y[big_n - 1]).exp() * v
    };
    let mut opts = NestedOptions::new(vec![0.5; big_n]);
    opts.rel_tol = rel_tol;
    opts.drop = 45.0;
    nested(&f, &opts)
}

/// KS test of `z_{N,N}(N)` against `Γ^{-1}(Σ_i (θ_i + θ̂_i))`.
#[derive(Clone, Debug, Serialize)]
pub struct CornerReport {
    pub ks: KsResult,
    pub parameter: f64,
    pub replicas: usize,
}

pub fn z_nn_check(params: &SolvableParams, replicas: usize, seed: u64) -> Result<CornerReport> {
    let big_n = params.size();
    params.validate(big_n)?;
    let parameter: f64 = (0..big_n).map(|i| params.theta[i] + params.theta_hat[i]).sum();
    let samples = replicate(seed, "corner", replicas, |rng| -> Result<f64> {
        let d = sample_weights(params, big_n, rng)?;
        Ok(crate::rsk::evolve_from_empty_log(&d, big_n)?.get(big_n, big_n))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let ks = ks_test(&samples, |x| inverse_gamma_cdf(x, parameter))?;
    Ok(CornerReport { ks, parameter, replicas })
}

/// Conditional-law consistency at `N = 2`: with `y` the simulated shape,
/// `log z₁₁(n) - E_{K̄(y)}[log z₁₁]` has mean zero.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PatternLawReport {
    pub simulated: Estimate,
    pub conditional: Estimate,
    pub residual: Estimate,
    pub z_score: f64,
}

pub fn pattern_law_check(params: &SolvableParams, n: usize, replicas: usize, seed: u64) -> Result<PatternLawReport> {
    if params.size() != 2 {
        return Err(Error::Size("the pattern-law check is implemented for N = 2".into()));
    }
    params.validate(n)?;
    let c = params.theta[1] - params.theta[0];
    let rows = replicate(seed, "pattern-law", replicas, |rng| -> Result<(f64, f64)> {
        let d = sample_weights(params, n, rng)?;
        let z = crate::rsk::evolve_from_empty_log(&d, n)?;
        let (l1, l2) = (z.log_get(2, 1), z.log_get(2, 2));
        let g = |v: f64| c * (v - l1) - (v - l1).exp() - (l2 - v).exp();
        let s = find_support(g, 0.5 * (l1 + l2), 40.0)?
            .ok_or_else(|| Error::Convergence("conditional density vanishes".into()))?;
        let mass = adaptive(|v| (g(v) - s.peak_value).exp(), s.lo, s.hi, Tolerance::rel(1e-10)).value;
        let first = adaptive(|v| v * (g(v) - s.peak_value).exp(), s.lo, s.hi, Tolerance::rel(1e-10)).value;
        Ok((z.log_get(1, 1), first / mass))
    })
    .into_iter()
    .collect::<Result<Vec<(f64, f64)>>>()?;
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let residual = Estimate::from_samples(&r);
    Ok(PatternLawReport {
        simulated: Estimate::from_samples(&a),
        conditional: Estimate::from_samples(&b),
        z_score: residual.mean / residual.std_error,
        residual,
    })
}

/// Shift array `ρ_{kℓ} = (k-1)/2 - ℓ + 1`, row by row.
pub fn rho(big_n: usize) -> Vec<Vec<f64>> {
    (1..=big_n).map(|k| (1..=k).map(|l| (k as f64 - 1.0) / 2.0 - l as f64 + 1.0).collect()).collect()
}

/// Free coordinates of a pattern with bottom row pinned, as used by the
/// entrance law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntranceArray {
    pub size: usize,
    /// Free coordinates in row-major order, rows `1..N-1`.
    pub t: Vec<f64>,
    /// Pinned bottom row.
    pub bottom: Vec<f64>,
}

impl EntranceArray {
    pub fn new(size: usize, t: Vec<f64>, bottom: Vec<f64>) -> Result<Self> {
        if t.len() != pattern_dim(size) || bottom.len() != size {
            return Err(contract("entrance array has the wrong number of coordinates"));
        }
        Ok(EntranceArray { size, t, bottom })
    }

    /// `t_{kℓ}`, 1-based.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        if k == self.size {
            self.bottom[l - 1]
        } else {
            self.t[pattern_index(k, l)]
        }
    }

    /// Sum of row `k`.
    pub fn row_sum(&self, k: usize) -> f64 {
        (1..=k).map(|l| self.get(k, l)).sum()
    }
}

/// `𝓕_θ(t)`.
pub fn f_theta(t: &EntranceArray, theta: &[f64]) -> Result<f64> {
    if theta.len() != t.size {
        return Err(contract("θ has the wrong length"));
    }
    Ok(PatternIntegrand::real(theta, &t.bottom).re_value(&t.t))
}

/// Maximizer `t⁰` of `𝓕_0` on the arrays with bottom row `0`, by Newton
/// ascent from `t = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct EntranceMaximum {
    pub array: EntranceArray,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

pub fn maximize_f0(big_n: usize, tol: f64) -> Result<EntranceMaximum> {
    if big_n == 0 {
        return Err(contract("N must be positive"));
    }
    let zeros = vec![0.0; big_n];
    let f = PatternIntegrand::real(&zeros, &zeros);
    let d = pattern_dim(big_n);
    let m = maximize(&f, &vec![0.0; d], tol, 200)?;
    if m.gradient_norm > tol {
        return Err(Error::Convergence(format!("gradient norm {:e} above {tol:e}", m.gradient_norm)));
    }
    Ok(EntranceMaximum {
        array: EntranceArray::new(big_n, m.x, zeros)?,
        value: m.value,
        gradient_norm: m.gradient_norm,
        iterations: m.iterations,
    })
}

/// `αᵀ ∇²𝓕_0(t) α` from the Hessian and from the edge form
/// `-Σ_edges (α_v - α_u)² e^{t_v - t_u}`, with `α` zero on the bottom row.
pub fn hessian_forms(t: &EntranceArray, alpha: &[f64]) -> Result<(f64, f64)> {
    let n = t.size;
    let d = pattern_dim(n);
    if alpha.len() != d {
        return Err(contract("direction has the wrong length"));
    }
    let zeros = vec![0.0; n];
    let f = PatternIntegrand::real(&zeros, &t.bottom);
    let mut h = vec![0.0; d * d];
    f.hessian(&t.t, &mut h);
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += alpha[i] * h[i * d + j] * alpha[j];
        }
    }
    let a = |k: usize, l: usize| if k == n { 0.0 } else { alpha[pattern_index(k, l)] };
    let mut e = 0.0;
    for k in 1..n {
        for l in 1..=k {
            // Edges (k+1,l) → (k,l) and (k,l) → (k+1,l+1).
            e -= (a(k, l) - a(k + 1, l)).powi(2) * (t.get(k, l) - t.get(k + 1, l)).exp();
            e -= (a(k + 1, l + 1) - a(k, l)).powi(2) * (t.get(k + 1, l + 1) - t.get(k, l)).exp();
        }
    }
    Ok((q, e))
}

/// Entry `z_{k,m+1}(m)` tabulated over the shift scale `M`.
#[derive(Clone, Debug, Serialize)]
pub struct EntranceSeries {
    pub m: usize,
    pub k: usize,
    pub log_values: Vec<f64>,
    /// Least-squares slope of `log z` against `M`.
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntranceReport {
    pub m_list: Vec<f64>,
    pub series: Vec<EntranceSeries>,
    /// `max_m |z_{m+1,m+1}(m) - 1|` at the largest `M`.
    pub diagonal_error: f64,
    /// Largest relative deviation of the `k = m+2` slopes from `-1/2`.
    pub slope_error: f64,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Starts from `z_{kℓ} = exp(t⁰_{kℓ} - M ρ_{kℓ})`, inserts the rows of `d`
/// and records `z_{k,m+1}(m)` for every `m` below `N` and `k ≥ m+1`.
pub fn entrance_limit_check(t0: &EntranceArray, d: &WeightMatrix, m_list: &[f64]) -> Result<EntranceReport> {
    let n = t0.size;
    if d.cols() != n {
        return Err(contract("weight matrix width differs from N"));
    }
    if m_list.len() < 2 || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(contract("the M list must be increasing with at least two entries"));
    }
    let r = rho(n);
    let steps = d.rows().min(n - 1);
    // values[m][k - m - 1][M index]
    let mut values: Vec<Vec<Vec<f64>>> = (0..=steps).map(|m| vec![Vec::new(); n - m]).collect();
    for &big_m in m_list {
        let rows: Vec<Vec<f64>> = (1..=n).map(|k| (1..=k).map(|l| t0.get(k, l) - big_m * r[k - 1][l - 1]).collect()).collect();
        let mut z = TriangularArray::from_log_rows(n, n, rows)?;
        for m in 0..=steps {
            if m > 0 {
                let w: Vec<f64> = d.row(m - 1).iter().map(|x| x.ln()).collect();
                z = z.insert_row_log(&w)?.0;
            }
            for k in m + 1..=n {
                values[m][k - m - 1].push(z.log_get(k, m + 1));
            }
        }
    }
    let mut series = Vec::new();
    let mut diagonal_error: f64 = 0.0;
    let mut slope_error: f64 = 0.0;
    for (m, per_k) in values.into_iter().enumerate() {
        for (i, log_values) in per_k.into_iter().enumerate() {
            let k = m + 1 + i;
            let slope = ls_slope(m_list, &log_values);
            if k == m + 1 {
                diagonal_error = diagonal_error.max(log_values.last().expect("nonempty").exp_m1().abs());
            }
            if k == m + 2 {
                slope_error = slope_error.max((slope + 0.5).abs() / 0.5);
            }
            series.push(EntranceSeries { m, k, log_values, slope });
        }
    }
    Ok(EntranceReport { m_list: m_list.to_vec(), series, diagonal_error, slope_error })
}
