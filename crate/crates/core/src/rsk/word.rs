use serde::{Deserialize, Serialize};

use super::semiring::Semifield;
use crate::error::{contract, domain, Result};

/// A word `(b_ℓ, …, b_N)` of positive weights starting at index `ℓ`
/// (1-based, as in the row labels of a triangular array).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Word {
    start: usize,
    entries: Vec<f64>,
}

impl Word {
    pub fn new(start: usize, entries: Vec<f64>) -> Result<Self> {
        if start == 0 {
            return Err(contract("word indices are 1-based"));
        }
        if let Some(bad) = entries.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(domain(format!("word entry {bad} is not a positive real")));
        }
        Ok(Word { start, entries })
    }

    /// The empty word that sits after index `size`.
    pub fn empty(size: usize) -> Self {
        Word { start: size + 1, entries: Vec::new() }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Last index covered, `N`.
    pub fn end(&self) -> usize {
        self.start + self.entries.len() - 1
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Geometric row insertion of `b` into `xi` over any semifield.
///
/// Both slices cover the same index range `ℓ..=N`. Returns `(ξ', b')`
/// where `b'` covers `ℓ+1..=N` (so it is empty for a single-entry word).
pub fn insert_word<S: Semifield>(xi: &[S], b: &[S]) -> (Vec<S>, Vec<S>) {
    assert_eq!(xi.len(), b.len(), "insert_word: length mismatch");
    let m = xi.len();
    let mut out: Vec<S> = Vec::with_capacity(m);
    let mut bumped = Vec::with_capacity(m.saturating_sub(1));
    if m == 0 {
        return (out, bumped);
    }
    out.push(b[0].mul(&xi[0]));
    for k in 1..m {
        let next = b[k].mul(&out[k - 1].add(&xi[k]));
        let num = b[k].mul(&xi[k]).mul(&out[k - 1]);
        bumped.push(num.div(&xi[k - 1].mul(&next)));
        out.push(next);
    }
    (out, bumped)
}

/// Insertion into an empty word: prefix products of `b`.
pub fn prefix_products<S: Semifield>(b: &[S]) -> Vec<S> {
    let mut out: Vec<S> = Vec::with_capacity(b.len());
    for (i, x) in b.iter().enumerate() {
        let v = if i == 0 { x.clone() } else { out[i - 1].mul(x) };
        out.push(v);
    }
    out
}

/// Row insertion `(ξ, b) ↦ (ξ', b')` on validated words.
pub fn row_insert(xi: &Word, b: &Word) -> Result<(Word, Word)> {
    if xi.start != b.start || xi.len() != b.len() {
        return Err(contract(format!(
            "row_insert: words cover {}..{} and {}..{}",
            xi.start,
            xi.start + xi.len(),
            b.start,
            b.start + b.len()
        )));
    }
    if xi.is_empty() {
        return Err(contract("row_insert: empty words"));
    }
    let (out, bumped) = insert_word(&xi.entries, &b.entries);
    Ok((
        Word { start: xi.start, entries: out },
        Word { start: xi.start + 1, entries: bumped },
    ))
}

/// Row insertion of `b` into an initially empty word.
pub fn row_insert_empty(b: &Word) -> Word {
    Word { start: b.start, entries: prefix_products(&b.entries) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
    }

    #[test]
    fn two_entry_example() {
        let xi = Word::new(1, vec![3.0, 2.0]).unwrap();
        let b = Word::new(1, vec![1.0, 5.0]).unwrap();
        let (x1, b1) = row_insert(&xi, &b).unwrap();
        assert!(close(x1.entries(), &[3.0, 25.0], 1e-15));
        assert_eq!(b1.start(), 2);
        assert!(close(b1.entries(), &[0.4], 1e-15));
    }

    #[test]
    fn single_entry_bumps_nothing() {
        let xi = Word::new(4, vec![1.5]).unwrap();
        let b = Word::new(4, vec![2.0]).unwrap();
        let (x1, b1) = row_insert(&xi, &b).unwrap();
        assert_eq!(x1.entries(), &[3.0]);
        assert!(b1.is_empty());
        assert_eq!(b1.start(), 5);
    }

    #[test]
    fn all_ones() {
        let ones = Word::new(1, vec![1.0; 3]).unwrap();
        let (x1, b1) = row_insert(&ones, &ones).unwrap();
        assert!(close(x1.entries(), &[1.0, 2.0, 3.0], 1e-15));
        assert!(close(b1.entries(), &[0.5, 2.0 / 3.0], 1e-15));
    }

    #[test]
    fn empty_insertion_is_prefix_product() {
        let b = Word::new(1, vec![2.0, 2.0, 4.0]).unwrap();
        assert_eq!(row_insert_empty(&b).entries(), &[2.0, 4.0, 16.0]);
        let b = Word::new(1, vec![2.0, 3.0]).unwrap();
        assert_eq!(row_insert_empty(&b).entries(), &[2.0, 6.0]);
        let b = Word::new(3, vec![0.7]).unwrap();
        assert_eq!(row_insert_empty(&b).entries(), &[0.7]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Word::new(1, vec![1.0, 0.0]).is_err());
        assert!(Word::new(1, vec![-1.0]).is_err());
        let a = Word::new(1, vec![1.0, 2.0]).unwrap();
        let b = Word::new(2, vec![1.0]).unwrap();
        assert!(matches!(row_insert(&a, &b), Err(crate::Error::Contract(_))));
    }
}
