//! Damped Newton ascent for smooth strictly concave objectives.

use crate::error::{Error, Result};

/// A twice-differentiable objective to be maximized.
pub trait Concave {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    /// Row-major `dim × dim` Hessian.
    fn hessian(&self, x: &[f64], h: &mut [f64]);
}

#[derive(Clone, Debug)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// In-place Cholesky of a symmetric positive definite row-major matrix.
/// Returns false if a pivot is not positive.
pub fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Log-determinant from a Cholesky factor.
pub fn cholesky_log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| 2.0 * l[i * n + i].ln()).sum()
}

/// Newton iteration with Armijo backtracking. Falls back to steepest
/// ascent when the negated Hessian is not positive definite.
pub fn maximize(obj: &dyn Concave, x0: &[f64], grad_tol: f64, max_iter: usize) -> Result<Maximum> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::Convergence("objective is not finite at the starting point".into()));
    }
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    for it in 0..max_iter {
        obj.gradient(&x, &mut g);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn <= grad_tol {
            return Ok(Maximum { x, value: f, gradient_norm: gn, iterations: it });
        }
        obj.hessian(&x, &mut h);
        h.iter_mut().for_each(|v| *v = -*v);
        let mut p = g.clone();
        if cholesky(&mut h, n) {
            cholesky_solve(&h, n, &mut p);
        }
        let slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let step_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step_norm <= 1e-12 * scale || slope <= 8.0 * f64::EPSILON * (1.0 + f.abs()) {
            // The correction, or the gain it promises, is below what the
            // arithmetic can resolve.
            return Ok(Maximum { x, value: f, gradient_norm: gn, iterations: it });
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + step * b).collect();
            let ft = obj.value(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * step * slope {
                x = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No ascent possible at working precision: stationary up to rounding.
            return Ok(Maximum { x, value: f, gradient_norm: gn, iterations: it });
        }
    }
    obj.gradient(&x, &mut g);
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gn <= grad_tol.max(1e-6) {
        return Ok(Maximum { x, value: f, gradient_norm: gn, iterations: max_iter });
    }
    Err(Error::Convergence(format!("Newton ascent stopped with gradient norm {gn:e}")))
}
