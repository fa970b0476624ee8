use crate::error::{domain, Error, Result};

/// Matrix `d = (d_{ij})` of positive weights; row `i` is time step `i+1`,
/// column `j` is the position `j+1` within the word inserted at that time.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(domain(format!("weight {bad} is not a positive real")));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged weight matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 0-based `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> WeightMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        WeightMatrix { rows: self.cols, cols: self.rows, data }
    }

    /// Parses the CSV exchange format: one time step per line, an optional
    /// `# n=<n> N=<N>` header (checked when present).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut declared: Option<(usize, usize)> = None;
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let mut n = None;
                let mut big_n = None;
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("n=") {
                        n = v.parse().ok();
                    } else if let Some(v) = tok.strip_prefix("N=") {
                        big_n = v.parse().ok();
                    }
                }
                if let (Some(n), Some(big_n)) = (n, big_n) {
                    declared = Some((n, big_n));
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row = rec
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if !row.is_empty() {
                rows.push(row);
            }
        }
        let m = Self::from_rows(&rows)?;
        if let Some((n, big_n)) = declared {
            if (n, big_n) != (m.rows, m.cols) {
                return Err(Error::Parse(format!(
                    "header declares n={n} N={big_n}, data is {}x{}",
                    m.rows, m.cols
                )));
            }
        }
        Ok(m)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = format!("# n={} N={}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}
