use super::array::TriangularArray;
use super::matrix::WeightMatrix;
use crate::error::{contract, Result};

/// `H = H(d^{[1]}) ⋯ H(d^{[n]})` where `H(x)_{ij} = x_i ⋯ x_j` for `i ≤ j`
/// and zero below the diagonal. Row-major `N × N`.
pub fn h_matrix_product(d: &WeightMatrix, n: usize) -> Vec<f64> {
    let big_n = d.cols();
    let mut h = vec![0.0; big_n * big_n];
    for i in 0..big_n {
        h[i * big_n + i] = 1.0;
    }
    let mut factor = vec![0.0; big_n * big_n];
    let mut next = vec![0.0; big_n * big_n];
    for m in 0..n {
        let x = d.row(m);
        factor.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..big_n {
            let mut p = 1.0;
            for j in i..big_n {
                p *= x[j];
                factor[i * big_n + j] = p;
            }
        }
        for i in 0..big_n {
            for j in i..big_n {
                let mut s = 0.0;
                for t in i..=j {
                    s += h[i * big_n + t] * factor[t * big_n + j];
                }
                next[i * big_n + j] = s;
            }
        }
        std::mem::swap(&mut h, &mut next);
    }
    h
}

/// `(log|det|, sign)` of the square submatrix of the row-major `dim × dim`
/// matrix `m` on the given row and column index lists. Rows and columns are
/// first scaled by the geometric mean of their nonzero magnitudes, then the
/// determinant is taken by LU with partial pivoting. A singular minor gives
/// `(-inf, 0)`.
pub fn minor_log_det(m: &[f64], dim: usize, rows: &[usize], cols: &[usize]) -> (f64, f64) {
    let s = rows.len();
    assert_eq!(s, cols.len());
    let mut a: Vec<f64> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| m[r * dim + c]))
        .collect();
    let mut log_scale = 0.0;
    for r in 0..s {
        let (sum, cnt) = (0..s)
            .map(|c| a[r * s + c].abs())
            .filter(|v| *v > 0.0)
            .fold((0.0, 0usize), |(sm, n), v| (sm + v.ln(), n + 1));
        if cnt == 0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let g = sum / cnt as f64;
        log_scale += g;
        let inv = (-g).exp();
        (0..s).for_each(|c| a[r * s + c] *= inv);
    }
    for c in 0..s {
        let (sum, cnt) = (0..s)
            .map(|r| a[r * s + c].abs())
            .filter(|v| *v > 0.0)
            .fold((0.0, 0usize), |(sm, n), v| (sm + v.ln(), n + 1));
        if cnt == 0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let g = sum / cnt as f64;
        log_scale += g;
        let inv = (-g).exp();
        (0..s).for_each(|r| a[r * s + c] *= inv);
    }
    let mut sign = 1.0;
    let mut log_abs = log_scale;
    for c in 0..s {
        let piv = (c..s)
            .max_by(|&x, &y| a[x * s + c].abs().total_cmp(&a[y * s + c].abs()))
            .expect("nonempty");
        let pv = a[piv * s + c];
        if pv == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if piv != c {
            for t in 0..s {
                a.swap(piv * s + t, c * s + t);
            }
            sign = -sign;
        }
        if pv < 0.0 {
            sign = -sign;
        }
        log_abs += pv.abs().ln();
        for r in c + 1..s {
            let f = a[r * s + c] / pv;
            if f != 0.0 {
                for t in c + 1..s {
                    a[r * s + t] -= f * a[c * s + t];
                }
            }
        }
    }
    (log_abs, sign)
}

fn check(d: &WeightMatrix, k: usize, l: usize, n: usize) -> Result<()> {
    if n > d.rows() {
        return Err(contract(format!("n = {n} exceeds {} rows", d.rows())));
    }
    if l == 0 || l > k || k > d.cols() {
        return Err(contract(format!("need 1 ≤ l ≤ k ≤ N, got l={l}, k={k}")));
    }
    Ok(())
}

fn log_tau(h: &[f64], dim: usize, k: usize, l: usize) -> (f64, f64) {
    let rows: Vec<usize> = (0..l).collect();
    let cols: Vec<usize> = (k - l..k).collect();
    minor_log_det(h, dim, &rows, &cols)
}

/// `τ_{k,l}(n)` as the minor of `H` on rows `1..=l` and columns
/// `k-l+1..=k`.
pub fn tau_by_minors(d: &WeightMatrix, k: usize, l: usize, n: usize) -> Result<f64> {
    check(d, k, l, n)?;
    let h = h_matrix_product(d, n);
    let (la, s) = log_tau(&h, d.cols(), k, l);
    Ok(s * la.exp())
}

/// The array `z(n)` built from ratios of minors:
/// `z_{k,l} = τ_{k,l} / τ_{k,l-1}` for `l ≤ min(k, n)`.
pub fn p_tableau(d: &WeightMatrix, n: usize) -> Result<TriangularArray> {
    if n > d.rows() {
        return Err(contract(format!("n = {n} exceeds {} rows", d.rows())));
    }
    let big_n = d.cols();
    let fill = n.min(big_n);
    let h = h_matrix_product(d, n);
    let mut log_rows = Vec::with_capacity(big_n);
    for k in 1..=big_n {
        let mut row = Vec::with_capacity(k.min(fill));
        let mut prev = 0.0;
        for l in 1..=k.min(fill) {
            let (la, s) = log_tau(&h, big_n, k, l);
            if s <= 0.0 {
                return Err(crate::Error::Convergence(format!(
                    "minor τ_({k},{l}) lost positivity in floating point"
                )));
            }
            row.push(la - prev);
            prev = la;
        }
        log_rows.push(row);
    }
    TriangularArray::from_log_rows(big_n, fill, log_rows)
}

/// The companion array `P_{N,n}(dᵀ)` of the first `n` rows of `d`.
pub fn q_tableau(d: &WeightMatrix, n: usize) -> Result<TriangularArray> {
    if n > d.rows() {
        return Err(contract(format!("n = {n} exceeds {} rows", d.rows())));
    }
    let head: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).to_vec()).collect();
    let t = WeightMatrix::from_rows(&head)?.transpose();
    p_tableau(&t, t.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsk::evolve_from_empty;

    #[test]
    fn square_full_minor_is_total_product() {
        let d = WeightMatrix::from_rows(&[vec![1.5, 0.2], vec![3.0, 0.7]]).unwrap();
        let t = tau_by_minors(&d, 2, 2, 2).unwrap();
        assert!((t - 1.5 * 0.2 * 3.0 * 0.7).abs() < 1e-14);
    }

    #[test]
    fn one_column() {
        let d = WeightMatrix::from_rows(&[vec![1.5], vec![0.2], vec![4.0]]).unwrap();
        assert!((tau_by_minors(&d, 1, 1, 3).unwrap() - 1.2).abs() < 1e-14);
    }

    #[test]
    fn determinant_of_known_matrix() {
        let m = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let (la, s) = minor_log_det(&m, 3, &[0, 1, 2], &[0, 1, 2]);
        assert!((s * la.exp() - 18.0).abs() < 1e-12);
        let (la, s) = minor_log_det(&m, 3, &[0, 1], &[1, 2]);
        assert!((s * la.exp() - 1.0).abs() < 1e-14);
        let (_, s) = minor_log_det(&[0.0, 1.0, 0.0, 1.0], 2, &[0, 1], &[0, 0]);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn rectangular_agreement_and_shape_symmetry() {
        let d = WeightMatrix::from_rows(&[
            vec![0.4, 2.5, 1.1],
            vec![3.3, 0.8, 0.5],
            vec![1.2, 6.0, 0.3],
            vec![0.9, 0.15, 2.0],
        ])
        .unwrap();
        let a = evolve_from_empty(&d, 4).unwrap();
        let b = p_tableau(&d, 4).unwrap();
        for k in 1..=3 {
            for l in 1..=k {
                assert!((a.get(k, l) / b.get(k, l) - 1.0).abs() < 1e-12);
            }
        }
        let q = q_tableau(&d, 4).unwrap();
        assert_eq!(q.size(), 4);
        for l in 1..=3 {
            assert!((q.get(4, l) / a.get(3, l) - 1.0).abs() < 1e-12);
        }
    }
}
