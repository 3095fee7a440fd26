//! Dense square matrices and their M-matrix classification.

mod classify;
mod graph;
mod report;
mod spectral;

use std::fmt;

use serde::Serialize;

use crate::{expr::eval_constant, Error, Result};

pub use classify::{
    classify, positive_null_vector, principal_minor_classify, principal_minors, witness, MClass,
    MatrixClassification, MinorWitness, NullVector, NullVectorMethod, SpectralWitness,
    MAX_MINOR_ORDER,
};
pub use graph::{is_irreducible, strongly_connected_components};
pub use report::{analyze, MatrixReport};
pub use spectral::{spectral_radius, RadiusEstimate, RadiusMethod};

/// Dense row-major real `n x n` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> SquareMatrix {
        assert!(n >= 1, "matrix order must be at least 1");
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<SquareMatrix> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Extent {
                    field: format!("row {}", i + 1),
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("non-finite entry {v} in row {}", i + 1)));
            }
            data.extend(row);
        }
        Ok(SquareMatrix { n, data })
    }

    /// Parses the plain-text matrix format: the order `n` on the first
    /// non-empty line, then `n` rows of whitespace separated entries.
    /// Entries may be decimals or constant expressions such as `2/3`.
    pub fn parse_text(text: &str) -> Result<SquareMatrix> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty matrix file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Invalid(format!("first line must be the order n, got `{header}`")))?;
        if n == 0 {
            return Err(Error::Invalid("matrix order must be at least 1".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            let row = line
                .split_whitespace()
                .map(eval_constant)
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Extent {
                field: "rows".into(),
                expected: n,
                found: rows.len(),
            });
        }
        SquareMatrix::from_rows(rows)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Non-positive off-diagonal entries.
    pub fn is_z(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)] <= 0.0))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.rows()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `P A P^T` where `perm[k]` is the original index placed at position `k`.
    pub fn permuted(&self, perm: &[usize]) -> SquareMatrix {
        assert_eq!(perm.len(), self.n);
        let mut out = SquareMatrix::zeros(self.n);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out[(i, j)] = self[(pi, pj)];
            }
        }
        out
    }

    pub fn submatrix(&self, idx: &[usize]) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor != 0.0 {
                    for k in col..n {
                        a[r * n + k] -= factor * a[col * n + k];
                    }
                }
            }
        }
        det
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                x.swap(col, pivot);
            }
            for r in col + 1..n {
                let factor = a[r * n + col] / a[col * n + col];
                for k in col..n {
                    a[r * n + k] -= factor * a[col * n + k];
                }
                x[r] -= factor * x[col];
            }
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
            x[r] = (x[r] - s) / a[r * n + r];
        }
        Some(x)
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{:>10}", fmt_sig(*v, 6))).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Formats with `digits` significant digits, trimming trailing zeros.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-5..=9).contains(&mag) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions() {
        let m = SquareMatrix::parse_text("3\n2/3 -1/3 0\n0 2/3 -1/3\n0 0 0\n").unwrap();
        assert_eq!(m[(0, 0)], 2.0 / 3.0);
        assert_eq!(m[(1, 2)], -1.0 / 3.0);
        assert_eq!(m.order(), 3);
    }

    #[test]
    fn parse_rejects_bad_shapes() {
        assert!(SquareMatrix::parse_text("2\n1 0\n").is_err());
        assert!(SquareMatrix::parse_text("2\n1 0 0\n0 1\n").is_err());
        assert!(SquareMatrix::parse_text("x\n").is_err());
        assert!(SquareMatrix::parse_text("").is_err());
    }

    #[test]
    fn determinant_and_solve() {
        let m = SquareMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((m.determinant() - 5.0).abs() < 1e-15);
        let x = m.solve(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let s = SquareMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(s.determinant(), 0.0);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(2.0 / 3.0, 6), "0.666667");
        assert_eq!(fmt_sig(-1.0 / 3.0, 6), "-0.333333");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(12.5, 6), "12.5");
        assert_eq!(fmt_sig(1e-12, 6), "1.00000e-12");
    }
}
