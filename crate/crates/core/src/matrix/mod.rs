//! Dense square matrices and the kernels the rest of the crate is built on:
//! min-plus products, Frobenius norms, a cyclic Jacobi eigensolver for the
//! symmetric case and an exhaustive semimetric checker.

mod eigen;
mod validate;

pub use eigen::{symmetric_eigh, SymmetricEigen, DEFAULT_MAX_SWEEPS, DEFAULT_RESIDUAL_TOL};
pub use validate::{validate_semimetric, SemimetricReport, TriangleViolation, DEFAULT_TOL, MAX_LISTED_VIOLATIONS};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense `n x n` matrix stored row-major.
///
/// User-facing matrices hold finite values only. The min-plus routines use
/// `f64::INFINITY` internally as the "unreachable" sentinel and never return
/// it from a public entry point.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self::filled(n, 0.0)
    }

    pub fn filled(n: usize, value: f64) -> Self {
        SquareMatrix {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row vectors; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(SquareMatrix { n, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` for every entry.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entrywise difference. Orders must agree.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> Result<f64> {
        self.check_same_order(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Copy of the matrix with row and column `index` deleted.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.n {
            return Err(Error::Index {
                index,
                len: self.n,
            });
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != index).collect();
        Ok(self.select(&keep))
    }

    /// Principal submatrix on the given ordinals, in the given order.
    pub fn select(&self, ordinals: &[usize]) -> Self {
        Self::from_fn(ordinals.len(), |i, j| self.get(ordinals[i], ordinals[j]))
    }

    /// Entrywise `alpha * self + other`.
    pub fn scaled_add(&self, alpha: f64, other: &SquareMatrix) -> Result<Self> {
        self.check_same_order(other)?;
        Ok(SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + b)
                .collect(),
        })
    }

    /// Ordinary matrix product.
    pub fn matmul(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_same_order(other)?;
        let n = self.n;
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, out_row)| {
                for l in 0..n {
                    let a = self.data[i * n + l];
                    if a == 0.0 {
                        continue;
                    }
                    let b_row = &other.data[l * n..(l + 1) * n];
                    for (o, b) in out_row.iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            });
        Ok(SquareMatrix { n, data: out })
    }

    pub fn set_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.set(i, i, value);
        }
    }

    /// Smallest entry off the diagonal, `None` for order < 2.
    pub fn min_offdiag(&self) -> Option<f64> {
        let n = self.n;
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = self.get(i, j);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    pub fn max_entry(&self) -> Option<f64> {
        self.data.iter().copied().reduce(f64::max)
    }

    fn check_same_order(&self, other: &SquareMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "matrix orders differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

/// Min-plus (tropical) product: `out[i][j] = min_l a[i][l] + b[l][j]`.
///
/// Rows are computed independently, so the parallel result is bit-identical
/// to the sequential one.
pub fn min_plus_product(a: &SquareMatrix, b: &SquareMatrix) -> Result<SquareMatrix> {
    a.check_same_order(b)?;
    Ok(min_plus_unchecked(a, b))
}

/// Min-plus product without order checks; tolerates the infinite sentinel.
pub(crate) fn min_plus_unchecked(a: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    let n = a.n;
    let mut out = vec![f64::INFINITY; n * n];
    out.par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, out_row)| {
            let a_row = &a.data[i * n..(i + 1) * n];
            for (l, &a_il) in a_row.iter().enumerate() {
                if a_il == f64::INFINITY {
                    continue;
                }
                let b_row = &b.data[l * n..(l + 1) * n];
                for (o, &b_lj) in out_row.iter_mut().zip(b_row) {
                    let cand = a_il + b_lj;
                    if cand < *o {
                        *o = cand;
                    }
                }
            }
        });
    SquareMatrix { n, data: out }
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(m: &SquareMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}
