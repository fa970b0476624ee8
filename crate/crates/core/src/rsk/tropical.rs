use super::array::Pattern;
use super::paths::tau_in;
use super::semiring::{log_add_exp, MaxPlus};
use crate::error::{contract, Result};

/// The (max,+) image `L(n)` of the array: row `k` holds
/// `L_{k,1..=min(k,fill)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TropicalArray {
    size: usize,
    fill: usize,
    rows: Vec<Vec<f64>>,
}

impl TropicalArray {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn fill(&self) -> usize {
        self.fill
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `L_{k,l}` (1-based).
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.rows[k - 1][l - 1]
    }

    fn from_pattern(p: &Pattern<MaxPlus>) -> Self {
        let rows = (1..=p.size())
            .map(|k| (1..=k.min(p.fill())).map(|l| p.get(k, l).0).collect())
            .collect();
        TropicalArray { size: p.size(), fill: p.fill(), rows }
    }

    /// Largest violation of the interlacing `L_{k+1,l+1} ≤ L_{k,l} ≤ L_{k+1,l}`
    /// (zero or negative when the array interlaces).
    pub fn interlacing_defect(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for k in 1..self.size {
            for l in 1..=k.min(self.fill) {
                worst = worst.max(self.get(k, l) - self.get(k + 1, l));
                if l < self.fill.min(k + 1) {
                    worst = worst.max(self.get(k + 1, l + 1) - self.get(k, l));
                }
            }
        }
        worst
    }
}

fn check_rows(w: &[Vec<f64>], n: usize) -> Result<usize> {
    if n > w.len() {
        return Err(contract(format!("{n} steps, {} rows", w.len())));
    }
    let cols = w.first().map_or(0, Vec::len);
    if w.iter().any(|r| r.len() != cols) {
        return Err(contract("ragged weight rows"));
    }
    Ok(cols)
}

/// `L(n)` by (max,+) array insertion of the rows `w[0..n]`.
pub fn tropical_evolve(w: &[Vec<f64>], n: usize) -> Result<TropicalArray> {
    let cols = check_rows(w, n)?;
    let mut p = Pattern::<MaxPlus>::empty(cols);
    for row in &w[..n] {
        let word: Vec<MaxPlus> = row.iter().map(|&x| MaxPlus(x)).collect();
        p.insert_mut(&word);
    }
    Ok(TropicalArray::from_pattern(&p))
}

/// `L(n)` by brute force: `L_{k,1} + … + L_{k,l}` is the largest total
/// weight of a non-intersecting `l`-tuple of paths.
pub fn tropical_brute_force(w: &[Vec<f64>], n: usize) -> Result<TropicalArray> {
    let cols = check_rows(w, n)?;
    let fill = n.min(cols);
    let mut rows = Vec::with_capacity(cols);
    for k in 1..=cols {
        let mut row = Vec::new();
        let mut prev = 0.0;
        for l in 1..=k.min(fill) {
            let best = tau_in(|i, j| MaxPlus(w[i][j]), n, cols, k, l)?
                .expect("a path tuple exists when l ≤ min(k, n)")
                .0;
            row.push(best - prev);
            prev = best;
        }
        rows.push(row);
    }
    Ok(TropicalArray { size: cols, fill, rows })
}

/// `ε log Σ_i e^{x_i/ε}`, the soft maximum at temperature `ε`.
pub fn soft_max(xs: &[f64], eps: f64) -> f64 {
    eps * xs.iter().fold(f64::NEG_INFINITY, |acc, x| log_add_exp(acc, x / eps))
}
