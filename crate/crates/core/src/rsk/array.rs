use serde::{Deserialize, Serialize};

use super::matrix::WeightMatrix;
use super::semiring::{LogWeight, Semifield};
use super::word::{insert_word, prefix_products};
use crate::error::{contract, domain, Error, Result};

/// A (possibly partial) triangular array over a semifield, stored by
/// diagonals: diagonal `ℓ` holds `(z_{ℓℓ}, …, z_{Nℓ})`. The number of
/// stored diagonals is the fill counter.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern<S> {
    size: usize,
    diagonals: Vec<Vec<S>>,
}

impl<S: Semifield> Pattern<S> {
    pub fn empty(size: usize) -> Self {
        Pattern { size, diagonals: Vec::with_capacity(size) }
    }

    pub fn from_diagonals(size: usize, diagonals: Vec<Vec<S>>) -> Result<Self> {
        if diagonals.len() > size {
            return Err(contract(format!("{} diagonals for size {size}", diagonals.len())));
        }
        for (l, d) in diagonals.iter().enumerate() {
            if d.len() != size - l {
                return Err(contract(format!(
                    "diagonal {} has {} entries, expected {}",
                    l + 1,
                    d.len(),
                    size - l
                )));
            }
        }
        Ok(Pattern { size, diagonals })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn fill(&self) -> usize {
        self.diagonals.len()
    }

    /// Diagonal `l` (1-based).
    pub fn diagonal(&self, l: usize) -> &[S] {
        &self.diagonals[l - 1]
    }

    pub fn diagonals(&self) -> &[Vec<S>] {
        &self.diagonals
    }

    /// `z_{k,l}` with 1-based indices, `l ≤ min(k, fill)`.
    pub fn get(&self, k: usize, l: usize) -> &S {
        &self.diagonals[l - 1][k - l]
    }

    /// Inserts a word `(b_1, …, b_N)`. Existing diagonals are updated by
    /// geometric row insertion; if the array is not full, the word that
    /// falls off the last diagonal starts a new one by empty insertion.
    /// Returns the new pattern and the words `a_1 = b, a_2, …` fed to each
    /// diagonal.
    pub fn insert(&self, word: &[S]) -> (Pattern<S>, Vec<Vec<S>>) {
        assert_eq!(word.len(), self.size, "inserted word must have length N");
        let mut diagonals = Vec::with_capacity(self.size);
        let mut aux = Vec::with_capacity(self.size);
        let mut a = word.to_vec();
        for d in &self.diagonals {
            let (nd, bumped) = insert_word(d, &a);
            diagonals.push(nd);
            aux.push(std::mem::replace(&mut a, bumped));
        }
        if diagonals.len() < self.size {
            diagonals.push(prefix_products(&a));
            aux.push(a);
        }
        (Pattern { size: self.size, diagonals }, aux)
    }

    /// In-place variant of [`Pattern::insert`] without the auxiliary array.
    pub fn insert_mut(&mut self, word: &[S]) {
        assert_eq!(word.len(), self.size, "inserted word must have length N");
        let mut a = word.to_vec();
        for d in self.diagonals.iter_mut() {
            let (nd, bumped) = insert_word(d, &a);
            *d = nd;
            a = bumped;
        }
        if self.diagonals.len() < self.size {
            self.diagonals.push(prefix_products(&a));
        }
    }

    pub fn map<T, F: Fn(&S) -> T>(&self, f: F) -> Pattern<T> {
        Pattern {
            size: self.size,
            diagonals: self.diagonals.iter().map(|d| d.iter().map(&f).collect()).collect(),
        }
    }
}

/// Positive triangular array with entries held both linearly and by their
/// logarithms. Row `k` (1-based) stores `z_{k,1..=min(k,fill)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularArray {
    size: usize,
    fill: usize,
    rows: Vec<Vec<f64>>,
    log_rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LinearJson {
    #[serde(rename = "N")]
    size: usize,
    fill: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LogJson {
    #[serde(rename = "N")]
    size: usize,
    fill: usize,
    log_rows: Vec<Vec<f64>>,
}

fn rows_from_pattern<S, F: Fn(&S) -> f64>(p: &Pattern<S>, f: F) -> Vec<Vec<f64>>
where
    S: Semifield,
{
    (1..=p.size())
        .map(|k| (1..=k.min(p.fill())).map(|l| f(p.get(k, l))).collect())
        .collect()
}

impl TriangularArray {
    pub fn from_pattern(p: &Pattern<f64>) -> Result<Self> {
        let rows = rows_from_pattern(p, |x| *x);
        Self::from_rows(p.size(), p.fill(), rows)
    }

    pub fn from_log_pattern(p: &Pattern<LogWeight>) -> Result<Self> {
        let log_rows = rows_from_pattern(p, |x| x.0);
        Self::from_log_rows(p.size(), p.fill(), log_rows)
    }

    /// Builds an array from linear rows; row `k` must hold `min(k, fill)`
    /// positive entries.
    pub fn from_rows(size: usize, fill: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(size, fill, &rows)?;
        if let Some(bad) = rows.iter().flatten().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(domain(format!("array entry {bad} is not a positive real")));
        }
        let log_rows = rows.iter().map(|r| r.iter().map(|x| x.ln()).collect()).collect();
        Ok(TriangularArray { size, fill, rows, log_rows })
    }

    /// Builds an array from log-domain rows. Linear entries are
    /// exponentiated and may be `inf`/`0` when out of double range.
    pub fn from_log_rows(size: usize, fill: usize, log_rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(size, fill, &log_rows)?;
        if let Some(bad) = log_rows.iter().flatten().find(|x| !x.is_finite()) {
            return Err(domain(format!("log entry {bad} is not finite")));
        }
        let rows = log_rows.iter().map(|r| r.iter().map(|x| x.exp()).collect()).collect();
        Ok(TriangularArray { size, fill, rows, log_rows })
    }

    fn check_shape(size: usize, fill: usize, rows: &[Vec<f64>]) -> Result<()> {
        if fill > size || rows.len() != size {
            return Err(contract(format!("{} rows, size {size}, fill {fill}", rows.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != (i + 1).min(fill) {
                return Err(contract(format!("row {} has {} entries", i + 1, r.len())));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn fill(&self) -> usize {
        self.fill
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn log_rows(&self) -> &[Vec<f64>] {
        &self.log_rows
    }

    /// `z_{k,l}` (1-based).
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.rows[k - 1][l - 1]
    }

    pub fn log_get(&self, k: usize, l: usize) -> f64 {
        self.log_rows[k - 1][l - 1]
    }

    /// Bottom row `z_{N,·}`, the shape of the array.
    pub fn shape(&self) -> &[f64] {
        &self.rows[self.size - 1]
    }

    /// True when every linear entry is finite and positive.
    pub fn linear_in_range(&self) -> bool {
        self.rows.iter().flatten().all(|x| *x > 0.0 && x.is_finite())
    }

    pub fn to_pattern(&self) -> Pattern<f64> {
        let diagonals = (1..=self.fill)
            .map(|l| (l..=self.size).map(|k| self.get(k, l)).collect())
            .collect();
        Pattern { size: self.size, diagonals }
    }

    pub fn to_log_pattern(&self) -> Pattern<LogWeight> {
        let diagonals = (1..=self.fill)
            .map(|l| (l..=self.size).map(|k| LogWeight(self.log_get(k, l))).collect())
            .collect();
        Pattern { size: self.size, diagonals }
    }

    fn check_word(&self, len: usize) -> Result<()> {
        if self.fill != self.size {
            return Err(contract(format!(
                "insert_row needs a full array (fill {} < N {}); use evolve_from_empty for growth",
                self.fill, self.size
            )));
        }
        if len != self.size {
            return Err(contract(format!("word of length {len} for N = {}", self.size)));
        }
        Ok(())
    }

    /// Array insertion `z ← b` in the linear domain. Returns the new array
    /// and the words `a_1, …, a_N` entering each diagonal.
    pub fn insert_row(&self, b: &[f64]) -> Result<(TriangularArray, Vec<Vec<f64>>)> {
        self.check_word(b.len())?;
        if b.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(domain("inserted word must be positive"));
        }
        let (p, aux) = self.to_pattern().insert(b);
        Ok((Self::from_pattern(&p)?, aux))
    }

    /// Array insertion with the word given by logarithms, computed by
    /// log-sum-exp throughout. Auxiliary words are returned as logarithms.
    pub fn insert_row_log(&self, log_b: &[f64]) -> Result<(TriangularArray, Vec<Vec<f64>>)> {
        self.check_word(log_b.len())?;
        if log_b.iter().any(|x| !x.is_finite()) {
            return Err(domain("log word must be finite"));
        }
        let w: Vec<LogWeight> = log_b.iter().map(|&x| LogWeight(x)).collect();
        let (p, aux) = self.to_log_pattern().insert(&w);
        let aux = aux.into_iter().map(|a| a.into_iter().map(|x| x.0).collect()).collect();
        Ok((Self::from_log_pattern(&p)?, aux))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(LinearJson { size: self.size, fill: self.fill, rows: self.rows.clone() })
            .expect("array serializes")
    }

    pub fn to_log_json(&self) -> serde_json::Value {
        serde_json::to_value(LogJson {
            size: self.size,
            fill: self.fill,
            log_rows: self.log_rows.clone(),
        })
        .expect("array serializes")
    }

    /// Reads either the linear (`rows`) or log (`log_rows`) JSON form.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        if v.get("log_rows").is_some() {
            let j: LogJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
            Self::from_log_rows(j.size, j.fill, j.log_rows)
        } else {
            let j: LinearJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
            Self::from_rows(j.size, j.fill, j.rows)
        }
    }
}

/// Evolution from the empty array driven by the first `n` rows of `d`, in
/// the linear domain.
pub fn evolve_from_empty(d: &WeightMatrix, n: usize) -> Result<TriangularArray> {
    if n > d.rows() {
        return Err(contract(format!("{n} steps requested, matrix has {} rows", d.rows())));
    }
    let mut p = Pattern::<f64>::empty(d.cols());
    for i in 0..n {
        p.insert_mut(d.row(i));
    }
    TriangularArray::from_pattern(&p)
}

/// Same as [`evolve_from_empty`] with every step in the log domain.
pub fn evolve_from_empty_log(d: &WeightMatrix, n: usize) -> Result<TriangularArray> {
    if n > d.rows() {
        return Err(contract(format!("{n} steps requested, matrix has {} rows", d.rows())));
    }
    let mut p = Pattern::<LogWeight>::empty(d.cols());
    for i in 0..n {
        let w: Vec<LogWeight> = d.row(i).iter().map(|x| LogWeight(x.ln())).collect();
        p.insert_mut(&w);
    }
    TriangularArray::from_log_pattern(&p)
}

/// Convenience re-export so callers can insert into patterns generically.
pub fn insert_pattern<S: Semifield>(p: &Pattern<S>, word: &[S]) -> (Pattern<S>, Vec<Vec<S>>) {
    p.insert(word)
}
