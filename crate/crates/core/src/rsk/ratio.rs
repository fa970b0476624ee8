use super::array::TriangularArray;
use crate::error::{contract, domain, Result};

/// Ratios `η_{k,l} = z_{k,l} / z_{k-1,l}` for `l < k`, stored by
/// diagonal: `eta[l-1] = (η_{l+1,l}, …, η_{N,l})`. Optionally carries the
/// exit ratios `ζ_{N,l}` of the last insertion.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioArray {
    size: usize,
    eta: Vec<Vec<f64>>,
    zeta: Option<Vec<f64>>,
}

impl RatioArray {
    /// Ratio diagonals `1..=d` for `d = eta.len()`.
    pub fn new(size: usize, eta: Vec<Vec<f64>>) -> Result<Self> {
        for (l, e) in eta.iter().enumerate() {
            if e.len() + l + 1 != size {
                return Err(contract(format!("ratio diagonal {} has {} entries", l + 1, e.len())));
            }
            if e.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(domain("ratios must be positive"));
            }
        }
        Ok(RatioArray { size, eta, zeta: None })
    }

    pub fn from_array(z: &TriangularArray) -> Self {
        let eta = (1..=z.fill())
            .map(|l| (l + 1..=z.size()).map(|k| (z.log_get(k, l) - z.log_get(k - 1, l)).exp()).collect())
            .collect();
        RatioArray { size: z.size(), eta, zeta: None }
    }

    pub fn with_zeta(mut self, zeta: Vec<f64>) -> Self {
        self.zeta = Some(zeta);
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `η_{k,l}` (1-based, `l < k`).
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.eta[l - 1][k - l - 1]
    }

    pub fn diagonal(&self, l: usize) -> &[f64] {
        &self.eta[l - 1]
    }

    pub fn diagonals(&self) -> &[Vec<f64>] {
        &self.eta
    }

    pub fn zeta(&self) -> Option<&[f64]> {
        self.zeta.as_deref()
    }
}

/// Row insertion in ratio coordinates. `eta` holds `(η_{l+1}, …, η_N)` of
/// the word being updated and `b` holds `(b_l, …, b_N)`. Returns the new
/// ratios, the bumped word `(b'_{l+1}, …, b'_N)` and the exit ratio
/// `ζ_N = ξ'_N / ξ_N`.
pub fn ratio_insert(eta: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if b.len() != eta.len() + 1 {
        return Err(contract(format!("{} ratios for a word of length {}", eta.len(), b.len())));
    }
    if eta.iter().chain(b).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(domain("ratio insertion needs positive inputs"));
    }
    Ok(ratio_insert_unchecked(eta, b))
}

pub(crate) fn ratio_insert_unchecked(eta: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let mut zeta = b[0];
    let mut eta_new = Vec::with_capacity(eta.len());
    let mut bumped = Vec::with_capacity(eta.len());
    for (i, &e) in eta.iter().enumerate() {
        let bk = b[i + 1];
        eta_new.push(bk * (1.0 + e / zeta));
        bumped.push(1.0 / (1.0 / zeta + 1.0 / e));
        zeta = bk * (1.0 + zeta / e);
    }
    (eta_new, bumped, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsk::{insert_word, Word};

    #[test]
    fn first_step_of_worked_example() {
        // ξ = (3, 2), b = (1, 5): η₂ = 2/3, ξ' = (3, 25).
        let (eta, bumped, zeta) = ratio_insert(&[2.0 / 3.0], &[1.0, 5.0]).unwrap();
        assert!((eta[0] - 25.0 / 3.0).abs() < 1e-14);
        assert!((bumped[0] - 0.4).abs() < 1e-15);
        assert!((zeta - 12.5).abs() < 1e-14);
    }

    #[test]
    fn unit_word_closed_form() {
        // With b ≡ 1: ζ_k = 1 + ζ_{k-1}/η_k, η'_k = 1 + η_k/ζ_{k-1}.
        let eta = [0.5, 2.0, 4.0];
        let (e, bp, z) = ratio_insert(&eta, &[1.0; 4]).unwrap();
        let z1 = 1.0;
        let z2 = 1.0 + z1 / 0.5;
        let z3 = 1.0 + z2 / 2.0;
        let z4 = 1.0 + z3 / 4.0;
        assert_eq!(e, vec![1.0 + 0.5 / z1, 1.0 + 2.0 / z2, 1.0 + 4.0 / z3]);
        assert_eq!(bp, vec![1.0 / (1.0 / z1 + 2.0), 1.0 / (1.0 / z2 + 0.5), 1.0 / (1.0 / z3 + 0.25)]);
        assert!((z - z4).abs() < 1e-15);
    }

    #[test]
    fn single_entry_word_has_no_ratios() {
        let (e, bp, z) = ratio_insert(&[], &[3.0]).unwrap();
        assert!(e.is_empty() && bp.is_empty());
        assert_eq!(z, 3.0);
    }

    #[test]
    fn agrees_with_row_insertion() {
        let xi = Word::new(2, vec![1.7, 0.4, 2.9, 0.8]).unwrap();
        let b = [0.6, 3.1, 1.2, 0.9];
        let eta: Vec<f64> = xi.entries().windows(2).map(|w| w[1] / w[0]).collect();
        let (x1, b1) = insert_word(xi.entries(), &b);
        let (e, bp, z) = ratio_insert(&eta, &b).unwrap();
        for k in 0..3 {
            assert!((e[k] - x1[k + 1] / x1[k]).abs() < 1e-13 * e[k]);
            assert!((bp[k] - b1[k]).abs() < 1e-13 * bp[k]);
        }
        assert!((z - x1[3] / xi.entries()[3]).abs() < 1e-13 * z);
    }
}
