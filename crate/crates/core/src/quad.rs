//! Quadrature in additive (log) variables.
//!
//! Integrands in this crate are smooth and decay at least exponentially in
//! every direction once written in `t = log x`. The strategy is always the
//! same: locate the peak of the log-integrand, walk outward until it has
//! dropped by a fixed number of nats, and integrate over the resulting box,
//! either with a Gauss–Legendre tensor grid or with adaptive Gauss–Kronrod
//! (nested for several dimensions).

use std::collections::{BinaryHeap, HashMap};
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait Value:
    Copy + Send + Sync + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Value for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Value for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// An integral value with an error estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                dp = 1.0;
                x = 0.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn scaled(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        (self.nodes.iter().map(|x| m + h * x).collect(), self.weights.iter().map(|w| w * h).collect())
    }

    pub fn integrate<V: Value>(&self, mut f: impl FnMut(f64) -> V, a: f64, b: f64) -> V {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        let mut s = V::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s = s + f(m + h * x) * (w * h);
        }
        s
    }
}

/// Tensor-product Gauss–Legendre over a box, `nodes` points per dimension.
pub fn tensor_gauss_legendre<V: Value>(
    f: &mut dyn FnMut(&[f64]) -> V,
    boxes: &[(f64, f64)],
    nodes: usize,
) -> V {
    let rule = GaussLegendre::cached(nodes);
    let scaled: Vec<(Vec<f64>, Vec<f64>)> = boxes.iter().map(|&(a, b)| rule.scaled(a, b)).collect();
    let d = boxes.len();
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = V::default();
    if d == 0 {
        return f(&point);
    }
    loop {
        let mut w = 1.0;
        for k in 0..d {
            point[k] = scaled[k].0[idx[k]];
            w *= scaled[k].1[idx[k]];
        }
        total = total + f(&point) * w;
        let mut k = d;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<V: Value>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    (k * h, (k - g).magnitude() * h.abs())
}

struct Piece<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Piece<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Piece<V> {}
impl<V> PartialOrd for Piece<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Piece<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Absolute and relative targets for adaptive quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_pieces: usize,
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel, max_pieces: 2000 }
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) on `[a, b]`. The error estimate is
/// the raw Gauss/Kronrod difference, which overstates the true error for
/// smooth integrands.
pub fn adaptive<V: Value>(mut f: impl FnMut(f64) -> V, a: f64, b: f64, tol: Tolerance) -> QuadResult<V> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b);
    let mut total = v;
    let mut err = e;
    let mut evaluations = 15;
    heap.push(Piece { a, b, value: v, error: e });
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target || heap.len() >= tol.max_pieces {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        err = err - worst.error + e1 + e2;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut value = V::default();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        error += p.error;
    }
    let converged = error <= tol.abs.max(tol.rel * value.magnitude()) * 1.000_001;
    QuadResult { value, error, evaluations, converged }
}

/// Interval outside which a log-integrand has dropped by `drop` nats below
/// its peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    pub peak: f64,
    pub peak_value: f64,
}

/// Largest half-width a support search may explore.
pub const MAX_SPAN: f64 = 400.0;

/// Finds the peak of a unimodal log-integrand by step-adaptive hill
/// climbing from `guess`, then walks outward by doubling steps until the
/// value is `drop` nats below the peak.
pub fn support_1d(logf: impl FnMut(f64) -> f64, guess: f64, drop: f64) -> Result<Support> {
    find_support(logf, guess, drop)?
        .ok_or_else(|| Error::Convergence(format!("integrand vanishes within {MAX_SPAN} of t = {guess}")))
}

/// As [`support_1d`], but `None` when the integrand underflows everywhere
/// the search looks.
pub fn find_support(mut logf: impl FnMut(f64) -> f64, guess: f64, drop: f64) -> Result<Option<Support>> {
    let mut t = guess;
    let mut v = logf(t);
    if !v.is_finite() {
        let mut found = false;
        let mut s = 0.5;
        while s < MAX_SPAN && !found {
            for cand in [guess + s, guess - s] {
                let c = logf(cand);
                if c.is_finite() {
                    t = cand;
                    v = c;
                    found = true;
                    break;
                }
            }
            s *= 2.0;
        }
        if !found {
            return Ok(None);
        }
    }
    let mut step = 1.0;
    let mut iterations = 0;
    while step > 1e-3 {
        iterations += 1;
        if iterations > 10_000 || (t - guess).abs() > MAX_SPAN {
            return Err(Error::Convergence("peak search did not settle".into()));
        }
        let r = logf(t + step);
        let l = logf(t - step);
        if r > v && r >= l {
            t += step;
            v = r;
            step *= 1.6;
        } else if l > v {
            t -= step;
            v = l;
            step *= 1.6;
        } else {
            step *= 0.5;
        }
    }
    let mut walk = |dir: f64| -> Result<f64> {
        let mut s = 0.5;
        loop {
            let x = t + dir * s;
            let val = logf(x);
            if !(val > v - drop) {
                return Ok(x);
            }
            s *= 2.0;
            if s > MAX_SPAN {
                return Err(Error::Convergence(format!("integrand does not decay away from t = {t}")));
            }
        }
    };
    let hi = walk(1.0)?;
    let lo = walk(-1.0)?;
    Ok(Some(Support { lo, hi, peak: t, peak_value: v }))
}

/// Options for [`nested`].
#[derive(Clone, Debug)]
pub struct NestedOptions {
    /// Starting points for the peak searches, one per dimension.
    pub guess: Vec<f64>,
    /// Depth of the box below the peak, in nats.
    pub drop: f64,
    /// Relative tolerance of the outermost integral; inner levels use a
    /// tenth of it.
    pub rel_tol: f64,
    pub max_pieces: usize,
}

impl NestedOptions {
    pub fn new(guess: Vec<f64>) -> Self {
        NestedOptions { guess, drop: 40.0, rel_tol: 1e-10, max_pieces: 500 }
    }
}

/// Iterated adaptive integration of `f` over `R^d` (in whatever coordinates
/// `f` is written), the last coordinate innermost. Each level finds its own
/// support from the magnitude of the inner integral.
pub fn nested<V: Value>(f: &dyn Fn(&[f64]) -> V, opts: &NestedOptions) -> Result<QuadResult<V>> {
    let d = opts.guess.len();
    if d == 0 {
        return Err(Error::Contract("nested integration needs at least one dimension".into()));
    }
    let mut prefix = Vec::with_capacity(d);
    nested_level(f, opts, 0, &mut prefix)
}

fn nested_level<V: Value>(
    f: &dyn Fn(&[f64]) -> V,
    opts: &NestedOptions,
    level: usize,
    prefix: &mut Vec<f64>,
) -> Result<QuadResult<V>> {
    let d = opts.guess.len();
    let rel = if level == 0 { opts.rel_tol } else { opts.rel_tol * 0.1 };
    let tol = Tolerance { abs: 0.0, rel, max_pieces: opts.max_pieces };
    let mut evaluations = 0usize;
    let mut failure: Option<Error> = None;
    let mut converged = true;
    let mut inner = |t: f64, prefix: &mut Vec<f64>| -> V {
        prefix.push(t);
        let v = if level + 1 == d {
            evaluations += 1;
            f(prefix)
        } else {
            match nested_level(f, opts, level + 1, prefix) {
                Ok(r) => {
                    evaluations += r.evaluations;
                    converged &= r.converged;
                    r.value
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    V::default()
                }
            }
        };
        prefix.pop();
        v
    };
    let Some(support) = find_support(|t| inner(t, prefix).magnitude().ln(), opts.guess[level], opts.drop)? else {
        if let Some(e) = failure {
            return Err(e);
        }
        return Ok(QuadResult { value: V::default(), error: 0.0, evaluations, converged: true });
    };
    let res = adaptive(|t| inner(t, prefix), support.lo, support.hi, tol);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult {
        value: res.value,
        error: res.error,
        evaluations: evaluations + res.evaluations,
        converged: converged && res.converged,
    })
}
