//! Packing instances `max <c,x> s.t. Ax <= b, x in {0,1}^n`, their seeded
//! generation and the line-oriented text format.
//!
//! File layout (UTF-8, `#` starts a comment line):
//!
//! ```text
//! m n
//! b_1 ... b_m
//! c_1 ... c_n
//! A_11 ... A_1n
//! ...
//! A_m1 ... A_mn
//! ```
//!
//! Reals are written with the shortest decimal representation that parses back
//! to the same `f64` (never more than 17 significant digits).

use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::rng::{Stream, STREAM_MATRIX, STREAM_OBJECTIVE};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("beta has {got} entries but m = {m}")]
    BetaLength { m: usize, got: usize },
    #[error("beta[{index}] = {value} is outside (0, 1/2)")]
    BetaOutOfRange { index: usize, value: f64 },
    #[error("n = {n} must be at least m + 1 = {}", m + 1)]
    TooFewVariables { m: usize, n: usize },
    #[error("line {line}: cannot parse {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("structural error: {0}")]
    Structure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A packing instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingInstance {
    m: usize,
    n: usize,
    /// Row-major `m x n`.
    a: Vec<f64>,
    c: Vec<f64>,
    b: Vec<f64>,
    seed: Option<u64>,
}

/// Non-fatal findings when loading an instance from text.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadWarning {
    /// An entry of `A` or `c` lies outside `[0, 1]`.
    EntryOutOfRange { field: String, value: f64 },
    /// Fewer than `m + 1` variables.
    FewVariables { m: usize, n: usize },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::EntryOutOfRange { field, value } => {
                write!(f, "{field} = {value} is outside [0, 1]")
            }
            LoadWarning::FewVariables { m, n } => {
                write!(f, "n = {n} is below m + 1 = {}", m + 1)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub instance: PackingInstance,
    pub warnings: Vec<LoadWarning>,
}

impl PackingInstance {
    /// Builds an instance from explicit data. Only shapes and `b >= 0` are
    /// checked; the `[0, 1]` entry range is a property of generated instances.
    pub fn new(a: Vec<Vec<f64>>, c: Vec<f64>, b: Vec<f64>) -> Result<Self, InstanceError> {
        let m = a.len();
        let n = c.len();
        if m == 0 || n == 0 {
            return Err(InstanceError::Structure("need m >= 1 and n >= 1".into()));
        }
        if b.len() != m {
            return Err(InstanceError::Structure(format!(
                "b has {} entries, expected m = {m}",
                b.len()
            )));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(InstanceError::Structure(format!(
                    "row {} of A has {} entries, expected n = {n}",
                    i + 1,
                    row.len()
                )));
            }
        }
        let all = a.iter().flatten().chain(&c).chain(&b);
        if let Some(v) = all.clone().find(|v| !v.is_finite()) {
            return Err(InstanceError::Structure(format!("non-finite entry {v}")));
        }
        if let Some((i, v)) = b.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(InstanceError::Structure(format!(
                "b_{} = {v} is negative; packing capacities must be nonnegative",
                i + 1
            )));
        }
        Ok(PackingInstance {
            m,
            n,
            a: a.into_iter().flatten().collect(),
            c,
            b,
            seed: None,
        })
    }

    /// Random instance: `A` and `c` i.i.d. uniform on `[0, 1)`, `b_i = beta_i * n`.
    ///
    /// `A` is drawn row-major from the matrix substream of `seed`, `c` from the
    /// objective substream, so equal arguments always give identical instances.
    pub fn generate(m: usize, n: usize, beta: &[f64], seed: u64) -> Result<Self, InstanceError> {
        if beta.len() != m {
            return Err(InstanceError::BetaLength { m, got: beta.len() });
        }
        if let Some((index, &value)) = beta
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0 && v < 0.5))
        {
            return Err(InstanceError::BetaOutOfRange { index, value });
        }
        if m == 0 || n < m + 1 {
            return Err(InstanceError::TooFewVariables { m, n });
        }
        let mut matrix = Stream::new(seed, STREAM_MATRIX);
        let a = (0..m * n).map(|_| matrix.uniform()).collect();
        let mut objective = Stream::new(seed, STREAM_OBJECTIVE);
        let c = (0..n).map(|_| objective.uniform()).collect();
        let b = beta.iter().map(|&beta_i| beta_i * n as f64).collect();
        Ok(PackingInstance {
            m,
            n,
            a,
            c,
            b,
            seed: Some(seed),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// Row-major matrix data.
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.a[i * self.n + j])
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `beta_i = b_i / n`.
    pub fn beta(&self) -> Vec<f64> {
        self.b.iter().map(|b| b / self.n as f64).collect()
    }

    /// Seed the instance was generated from; `None` when loaded from a file.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `<c, x>` for any real vector.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `<c, x>` for a 0/1 point.
    pub fn objective01(&self, x: &[u8]) -> f64 {
        self.c
            .iter()
            .zip(x)
            .filter(|(_, &x)| x == 1)
            .map(|(c, _)| *c)
            .sum()
    }

    /// Occupation `Ax` of a 0/1 point.
    pub fn occupation01(&self, x: &[u8]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(_, &x)| x == 1)
                    .map(|(a, _)| *a)
                    .sum()
            })
            .collect()
    }

    /// Occupation `Ax` of a real vector.
    pub fn occupation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.row(i).iter().zip(x).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// `Ax <= b + tol` for a 0/1 point.
    pub fn is_feasible01(&self, x: &[u8], tol: f64) -> bool {
        self.occupation01(x)
            .iter()
            .zip(&self.b)
            .all(|(ax, b)| *ax <= b + tol)
    }

    /// Column points `(c_j, A^j)` in `R^{m+1}`.
    pub fn column_points(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|j| std::iter::once(self.c[j]).chain(self.column(j)).collect())
            .collect()
    }

    /// Same numerical data; provenance (seed) is ignored.
    pub fn same_data(&self, other: &PackingInstance) -> bool {
        self.m == other.m
            && self.n == other.n
            && bits(&self.a) == bits(&other.a)
            && bits(&self.c) == bits(&other.c)
            && bits(&self.b) == bits(&other.b)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.seed {
            Some(seed) => {
                let beta: Vec<String> = self.beta().iter().map(|b| b.to_string()).collect();
                let _ = writeln!(
                    out,
                    "# packing instance seed={seed} beta={}",
                    beta.join(",")
                );
            }
            None => out.push_str("# packing instance\n"),
        }
        let _ = writeln!(out, "{} {}", self.m, self.n);
        out.push_str(&join(&self.b));
        out.push('\n');
        out.push_str(&join(&self.c));
        out.push('\n');
        for i in 0..self.m {
            out.push_str(&join(self.row(i)));
            out.push('\n');
        }
        out
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<(), InstanceError> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Loaded, InstanceError> {
        let mut lines = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            lines.push((idx + 1, trimmed.to_string()));
        }
        let mut it = lines.iter();
        let (line_no, header) = it
            .next()
            .ok_or_else(|| InstanceError::Structure("empty instance file".into()))?;
        let dims = parse_reals::<usize>(*line_no, header, "dimensions")?;
        let [m, n] = dims[..] else {
            return Err(InstanceError::Parse {
                line: *line_no,
                field: "dimensions".into(),
                message: format!("expected `m n`, found {} values", dims.len()),
            });
        };
        let mut next_vec = |field: &str, expected: usize| -> Result<Vec<f64>, InstanceError> {
            let (line_no, text) = it
                .next()
                .ok_or_else(|| InstanceError::Structure(format!("missing line for {field}")))?;
            let v = parse_reals::<f64>(*line_no, text, field)?;
            if v.len() != expected {
                return Err(InstanceError::Structure(format!(
                    "line {line_no}: {field} has {} entries, expected {expected}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let b = next_vec("b", m)?;
        let c = next_vec("c", n)?;
        let mut a = Vec::with_capacity(m);
        for i in 0..m {
            a.push(next_vec(&format!("row {} of A", i + 1), n)?);
        }
        if let Some((line_no, _)) = it.next() {
            return Err(InstanceError::Structure(format!(
                "line {line_no}: unexpected data after {m} rows of A"
            )));
        }

        let mut warnings = Vec::new();
        let out_of_range = |v: f64| !(0.0..=1.0).contains(&v);
        for (j, &v) in c.iter().enumerate() {
            if out_of_range(v) {
                warnings.push(LoadWarning::EntryOutOfRange {
                    field: format!("c_{}", j + 1),
                    value: v,
                });
            }
        }
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if out_of_range(v) {
                    warnings.push(LoadWarning::EntryOutOfRange {
                        field: format!("A_{},{}", i + 1, j + 1),
                        value: v,
                    });
                }
            }
        }
        if n < m + 1 {
            warnings.push(LoadWarning::FewVariables { m, n });
        }
        let instance = PackingInstance::new(a, c, b)?;
        Ok(Loaded { instance, warnings })
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Loaded, InstanceError> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_reals<T: std::str::FromStr>(
    line: usize,
    text: &str,
    field: &str,
) -> Result<Vec<T>, InstanceError>
where
    T::Err: std::fmt::Display,
{
    text.split_whitespace()
        .enumerate()
        .map(|(k, tok)| {
            tok.parse::<T>().map_err(|e| InstanceError::Parse {
                line,
                field: format!("{field} entry {}", k + 1),
                message: format!("{tok:?}: {e}"),
            })
        })
        .collect()
}
