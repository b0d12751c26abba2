//! Sparse binary quadratic models: QUBO matrices, Ising models, resource
//! metrics, and text export.
//!
//! A [`QuboMatrix`] stores the upper triangle of `Q` with diagonal entries
//! acting as linear coefficients (`x^2 = x` for binary `x`) plus a scalar
//! offset, so energies are comparable between the "objective value" and the
//! "raw" (offset-free) conventions. Coefficients that accumulate to exactly
//! zero are removed; on integral penalty data this makes nonzero counts well
//! defined.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("variable index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("expected a vector of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("spin vector entry at {index} must be -1 or +1, got {value}")]
    BadSpin { index: usize, value: i8 },
    #[error("cannot parse matrix: {0}")]
    Parse(String),
    #[error("format {0} does not support parsing")]
    UnsupportedParse(&'static str),
}

/// Upper-triangular sparse QUBO with explicit constant offset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboMatrix {
    pub fn new(n: usize) -> Self {
        QuboMatrix {
            n,
            entries: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    /// Accumulate `c` onto the coefficient at `(min(i,j), max(i,j))`.
    /// An entry whose coefficient cancels to exactly zero is dropped.
    pub fn add_term(&mut self, i: usize, j: usize, c: f64) -> Result<(), QuboError> {
        for index in [i, j] {
            if index >= self.n {
                return Err(QuboError::IndexOutOfRange { index, n: self.n });
            }
        }
        let key = (i.min(j), i.max(j));
        let slot = self.entries.entry(key).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.entries.remove(&key);
        }
        Ok(())
    }

    /// Coefficient at `(i, j)` in either index order; zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Stored entries in sorted `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn check_len(&self, len: usize) -> Result<(), QuboError> {
        if len != self.n {
            return Err(QuboError::LengthMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }

    /// `x^T Q x` without the offset.
    pub fn raw_energy(&self, x: &[u8]) -> Result<f64, QuboError> {
        self.check_len(x.len())?;
        let mut e = 0.0;
        for (&(i, j), &v) in &self.entries {
            if x[i] != 0 && x[j] != 0 {
                e += v;
            }
        }
        Ok(e)
    }

    /// `x^T Q x` plus the offset.
    pub fn energy(&self, x: &[u8]) -> Result<f64, QuboError> {
        Ok(self.raw_energy(x)? + self.offset)
    }

    /// Convert to Ising form through `x_i = (s_i + 1) / 2`.
    ///
    /// The identity `energy(x) = ising.energy(s) + ising.offset` holds
    /// exactly for every assignment with `s = 2x - 1`.
    pub fn to_ising(&self) -> IsingModel {
        let mut fields = vec![0.0; self.n];
        let mut couplings = BTreeMap::new();
        let mut offset = self.offset;
        for (&(i, j), &v) in &self.entries {
            if i == j {
                fields[i] -= v / 2.0;
                offset += v / 2.0;
            } else {
                couplings.insert((i, j), -v / 4.0);
                fields[i] -= v / 4.0;
                fields[j] -= v / 4.0;
                offset += v / 4.0;
            }
        }
        IsingModel {
            n: self.n,
            couplings,
            fields,
            offset,
        }
    }

    pub fn metrics(&self) -> MatrixMetrics {
        let mut row = vec![0usize; self.n];
        let mut col = vec![0usize; self.n];
        let mut couplings = 0usize;
        for &(i, j) in self.entries.keys() {
            row[i] += 1;
            col[j] += 1;
            if i != j {
                couplings += 1;
            }
        }
        let max_incident = row.iter().chain(col.iter()).copied().max().unwrap_or(0);
        let cells = self.n * self.n;
        MatrixMetrics {
            n: self.n,
            nnz: self.entries.len(),
            cells,
            density: if cells == 0 {
                0.0
            } else {
                self.entries.len() as f64 / cells as f64
            },
            couplings,
            max_incident,
        }
    }

    /// Render the matrix in one of the text formats. All formats use LF line
    /// endings, `.` decimal separators, and print integral coefficients
    /// without a decimal point.
    pub fn export(&self, format: MatrixFormat) -> String {
        match format {
            MatrixFormat::DenseCsv => {
                let rows: Vec<String> = (0..self.n)
                    .map(|i| {
                        (0..self.n)
                            .map(|j| {
                                if i <= j {
                                    fmt_coeff(self.get(i, j))
                                } else {
                                    "0".to_string()
                                }
                            })
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                rows.join("\n")
            }
            MatrixFormat::Coo => {
                let mut lines: Vec<String> = self
                    .entries()
                    .map(|(i, j, v)| format!("{i} {j} {}", fmt_coeff(v)))
                    .collect();
                lines.push(format!("# offset {}", fmt_coeff(self.offset)));
                lines.join("\n")
            }
            MatrixFormat::Json => {
                let entries: Vec<serde_json::Value> = self
                    .entries()
                    .map(|(i, j, v)| serde_json::json!([i, j, v]))
                    .collect();
                serde_json::json!({
                    "n": self.n,
                    "offset": self.offset,
                    "entries": entries,
                })
                .to_string()
            }
        }
    }

    /// Parse the `coo` text format back into a matrix of known size.
    pub fn parse_coo(text: &str, n: usize) -> Result<Self, QuboError> {
        let mut q = QuboMatrix::new(n);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(value) = rest.strip_prefix("offset") {
                    let v: f64 = value
                        .trim()
                        .parse()
                        .map_err(|e| QuboError::Parse(format!("bad offset: {e}")))?;
                    q.offset = v;
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let (i, j, v) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(i), Some(j), Some(v), None) => (i, j, v),
                _ => return Err(QuboError::Parse(format!("expected \"i j value\": {line:?}"))),
            };
            let i: usize = i.parse().map_err(|e| QuboError::Parse(format!("bad index: {e}")))?;
            let j: usize = j.parse().map_err(|e| QuboError::Parse(format!("bad index: {e}")))?;
            let v: f64 = v.parse().map_err(|e| QuboError::Parse(format!("bad value: {e}")))?;
            q.add_term(i, j, v)?;
        }
        Ok(q)
    }

    /// Parse the `json` export format.
    pub fn parse_json(text: &str) -> Result<Self, QuboError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| QuboError::Parse(e.to_string()))?;
        let n = doc["n"]
            .as_u64()
            .ok_or_else(|| QuboError::Parse("missing n".into()))? as usize;
        let mut q = QuboMatrix::new(n);
        q.offset = doc["offset"]
            .as_f64()
            .ok_or_else(|| QuboError::Parse("missing offset".into()))?;
        let entries = doc["entries"]
            .as_array()
            .ok_or_else(|| QuboError::Parse("missing entries".into()))?;
        for e in entries {
            let triple = e
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| QuboError::Parse("entry is not [i, j, value]".into()))?;
            let i = triple[0]
                .as_u64()
                .ok_or_else(|| QuboError::Parse("bad entry index".into()))? as usize;
            let j = triple[1]
                .as_u64()
                .ok_or_else(|| QuboError::Parse("bad entry index".into()))? as usize;
            let v = triple[2]
                .as_f64()
                .ok_or_else(|| QuboError::Parse("bad entry value".into()))?;
            q.add_term(i, j, v)?;
        }
        Ok(q)
    }
}

/// Ising Hamiltonian `H(s) = -sum J_ij s_i s_j - sum h_i s_i` over spins
/// `s_i` in `{-1, +1}`, with a bookkeeping offset from the QUBO conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub n: usize,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub fields: Vec<f64>,
    pub offset: f64,
}

impl IsingModel {
    /// The Hamiltonian value itself; the offset is not included.
    pub fn energy(&self, s: &[i8]) -> Result<f64, QuboError> {
        if s.len() != self.n {
            return Err(QuboError::LengthMismatch {
                expected: self.n,
                actual: s.len(),
            });
        }
        for (index, &v) in s.iter().enumerate() {
            if v != 1 && v != -1 {
                return Err(QuboError::BadSpin { index, value: v });
            }
        }
        let mut e = 0.0;
        for (&(i, j), &jij) in &self.couplings {
            e -= jij * f64::from(s[i]) * f64::from(s[j]);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e -= h * f64::from(s[i]);
        }
        Ok(e)
    }
}

/// Sparsity and connectivity statistics of a stored matrix. `cells` counts
/// the full `n x n` grid; `max_incident` is the largest number of stored
/// entries in any single row or column of the upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixMetrics {
    pub n: usize,
    pub nnz: usize,
    pub cells: usize,
    pub density: f64,
    pub couplings: usize,
    pub max_incident: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    DenseCsv,
    Coo,
    Json,
}

impl MatrixFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "dense-csv" => Some(MatrixFormat::DenseCsv),
            "coo" => Some(MatrixFormat::Coo),
            "json" => Some(MatrixFormat::Json),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MatrixFormat::DenseCsv => "dense-csv",
            MatrixFormat::Coo => "coo",
            MatrixFormat::Json => "json",
        }
    }
}

/// Integers print without a decimal point; other values keep the shortest
/// round-trip form up to twelve significant digits.
fn fmt_coeff(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{v:.0}");
    }
    let shortest = format!("{v}");
    if significant_digits(&shortest) <= 12 {
        shortest
    } else {
        format!("{v:.11e}")
    }
}

fn significant_digits(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap_or(s);
    mantissa
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count()
}
