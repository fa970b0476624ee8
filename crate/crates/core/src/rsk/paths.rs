use super::matrix::WeightMatrix;
use super::semiring::Semifield;
use crate::error::{contract, Error, Result};

/// Largest number of path tuples an exhaustive enumeration may visit.
pub const PATH_GUARD: usize = 1_000_000;

struct Walker<'a, F> {
    n: usize,
    cols: usize,
    k: usize,
    l: usize,
    occupied: Vec<bool>,
    cells: Vec<(usize, usize)>,
    count: usize,
    visit: &'a mut F,
}

impl<F: FnMut(&[(usize, usize)])> Walker<'_, F> {
    fn free(&self, i: usize, j: usize) -> bool {
        !self.occupied[i * self.cols + j]
    }

    fn step(&mut self, r: usize, i: usize, j: usize) -> Result<()> {
        self.occupied[i * self.cols + j] = true;
        self.cells.push((i, j));
        let end_col = self.k - self.l + r;
        if i == self.n - 1 && j == end_col {
            if r + 1 == self.l {
                self.count += 1;
                if self.count > PATH_GUARD {
                    return Err(Error::Size(format!("more than {PATH_GUARD} path tuples")));
                }
                (self.visit)(&self.cells);
            } else if self.free(0, r + 1) {
                self.step(r + 1, 0, r + 1)?;
            }
        } else {
            if i + 1 < self.n && self.free(i + 1, j) {
                self.step(r, i + 1, j)?;
            }
            if j < end_col && self.free(i, j + 1) {
                self.step(r, i, j + 1)?;
            }
        }
        self.occupied[i * self.cols + j] = false;
        self.cells.pop();
        Ok(())
    }
}

/// Enumerates, in lexicographic depth-first order, every `l`-tuple of
/// non-touching up/right lattice paths where path `r` (0-based) runs from
/// cell `(0, r)` to `(n-1, k-l+r)`. Cells are `(time, column)`, 0-based;
/// `k` and `l` are 1-based as in `τ_{k,l}(n)`. The callback receives the
/// union of cells of the tuple. Returns the number of tuples.
pub fn for_each_tuple<F: FnMut(&[(usize, usize)])>(
    n: usize,
    cols: usize,
    k: usize,
    l: usize,
    mut visit: F,
) -> Result<usize> {
    if l == 0 || l > k || k > cols {
        return Err(contract(format!("need 1 ≤ l ≤ k ≤ N, got l={l}, k={k}, N={cols}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut w = Walker {
        n,
        cols,
        k,
        l,
        occupied: vec![false; n * cols],
        cells: Vec::with_capacity(l * (n + k)),
        count: 0,
        visit: &mut visit,
    };
    w.step(0, 0, 0)?;
    Ok(w.count)
}

/// Semiring sum over path tuples of the product of cell weights;
/// `None` when there is no tuple.
pub fn tau_in<S: Semifield>(
    weight: impl Fn(usize, usize) -> S,
    n: usize,
    cols: usize,
    k: usize,
    l: usize,
) -> Result<Option<S>> {
    let mut acc: Option<S> = None;
    for_each_tuple(n, cols, k, l, |cells| {
        let mut prod = weight(cells[0].0, cells[0].1);
        for &(i, j) in &cells[1..] {
            prod = prod.mul(&weight(i, j));
        }
        acc = Some(match acc.take() {
            None => prod,
            Some(a) => a.add(&prod),
        });
    })?;
    Ok(acc)
}

/// `τ_{k,l}(n)` by exhaustive enumeration of non-intersecting path tuples
/// in the first `n` rows of `d` (zero when no tuple exists).
pub fn tau_by_paths(d: &WeightMatrix, k: usize, l: usize, n: usize) -> Result<f64> {
    if n > d.rows() {
        return Err(contract(format!("n = {n} exceeds {} rows", d.rows())));
    }
    Ok(tau_in(|i, j| d.get(i, j), n, d.cols(), k, l)?.unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> WeightMatrix {
        WeightMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_by_two_single_path() {
        let d = mat(&[&[1.3, 0.6], &[2.2, 0.9]]);
        let t = tau_by_paths(&d, 2, 1, 2).unwrap();
        let want = d.get(0, 0) * d.get(1, 1) * (d.get(1, 0) + d.get(0, 1));
        assert!((t - want).abs() < 1e-15);
    }

    #[test]
    fn full_staircase_is_product_of_all() {
        let d = mat(&[&[1.1, 2.0, 0.3], &[0.5, 1.7, 2.2], &[0.9, 1.4, 0.8]]);
        let t = tau_by_paths(&d, 3, 3, 3).unwrap();
        let all: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| d.get(i, j)).product();
        assert!((t - all).abs() < 1e-14 * all);
        assert_eq!(for_each_tuple(3, 3, 3, 3, |_| {}).unwrap(), 1);
    }

    #[test]
    fn more_paths_than_rows() {
        let d = mat(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        // n < l < k: the tuple set is empty.
        assert_eq!(tau_by_paths(&d, 3, 2, 1).unwrap(), 0.0);
        assert_eq!(for_each_tuple(1, 3, 3, 2, |_| {}).unwrap(), 0);
        // n < l = k: one tuple of straight paths, and τ_{k,k}(n) = τ_{k,n}(n).
        assert_eq!(tau_by_paths(&d, 3, 3, 2).unwrap(), 720.0);
        assert_eq!(tau_by_paths(&d, 3, 2, 2).unwrap(), 720.0);
        assert_eq!(tau_by_paths(&d, 2, 2, 1).unwrap(), tau_by_paths(&d, 2, 1, 1).unwrap());
        assert_eq!(tau_by_paths(&d, 3, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn single_column_is_product() {
        let d = mat(&[&[2.0], &[3.0], &[0.25]]);
        assert!((tau_by_paths(&d, 1, 1, 3).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn path_counts_are_binomial() {
        // Single paths from (1,1) to (n,k) number C(n+k-2, n-1).
        assert_eq!(for_each_tuple(4, 4, 4, 1, |_| {}).unwrap(), 20);
        assert_eq!(for_each_tuple(3, 5, 5, 1, |_| {}).unwrap(), 15);
    }
}
