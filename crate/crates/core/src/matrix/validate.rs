use rayon::prelude::*;
use serde::Serialize;

use super::SquareMatrix;

/// Default absolute comparison slack for matrix validation.
pub const DEFAULT_TOL: f64 = 1e-9;
/// At most this many violations are listed; all of them are counted.
pub const MAX_LISTED_VIOLATIONS: usize = 1000;

/// A triple `(i, k, j)` for which `m[i][j] > m[i][k] + m[k][j] + tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    /// `m[i][j]`
    pub lhs: f64,
    /// `m[i][k] + m[k][j]`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemimetricReport {
    pub symmetric: bool,
    pub zero_diagonal: bool,
    pub non_negative: bool,
    /// The first violations in `(i, k, j)` order, at most
    /// [`MAX_LISTED_VIOLATIONS`].
    pub triangle_violations: Vec<TriangleViolation>,
    pub triangle_violation_count: usize,
    /// All axioms hold and off-diagonal entries exceed `tol`.
    pub is_metric: bool,
    /// Smallest off-diagonal entry; `None` for a single entity.
    pub min_offdiag: Option<f64>,
}

impl SemimetricReport {
    /// Symmetric, zero diagonal and non-negative: the proximity-function
    /// preconditions, with the triangle inequality not required.
    pub fn is_semimetric_shape(&self) -> bool {
        self.symmetric && self.zero_diagonal && self.non_negative
    }

    pub fn is_pseudo_metric(&self) -> bool {
        self.is_semimetric_shape() && self.triangle_violation_count == 0
    }
}

fn row_violations(m: &SquareMatrix, i: usize, tol: f64) -> (usize, Vec<TriangleViolation>) {
    let n = m.order();
    let row_i = m.row(i);
    let mut count = 0;
    let mut listed = Vec::new();
    for k in 0..n {
        if k == i {
            continue;
        }
        let ik = row_i[k];
        let row_k = m.row(k);
        for j in 0..n {
            if j == i || j == k {
                continue;
            }
            let rhs = ik + row_k[j];
            if row_i[j] > rhs + tol {
                count += 1;
                if listed.len() < MAX_LISTED_VIOLATIONS {
                    listed.push(TriangleViolation {
                        i,
                        k,
                        j,
                        lhs: row_i[j],
                        rhs,
                    });
                }
            }
        }
    }
    (count, listed)
}

/// Checks symmetry, diagonal, sign and every triangle `(i, k, j)` with
/// `i != j` and `k` distinct from both, using absolute slack `tol`.
pub fn validate_semimetric(m: &SquareMatrix, tol: f64) -> SemimetricReport {
    let n = m.order();
    let mut symmetric = true;
    let mut zero_diagonal = true;
    let mut non_negative = true;
    for i in 0..n {
        if m.get(i, i).abs() > tol {
            zero_diagonal = false;
        }
        for j in 0..n {
            let v = m.get(i, j);
            if v < -tol {
                non_negative = false;
            }
            if j > i && (v - m.get(j, i)).abs() > tol {
                symmetric = false;
            }
        }
    }

    let per_row: Vec<(usize, Vec<TriangleViolation>)> = (0..n)
        .into_par_iter()
        .map(|i| row_violations(m, i, tol))
        .collect();
    let triangle_violation_count = per_row.iter().map(|r| r.0).sum();
    let triangle_violations: Vec<TriangleViolation> = per_row
        .into_iter()
        .flat_map(|r| r.1)
        .take(MAX_LISTED_VIOLATIONS)
        .collect();

    let min_offdiag = m.min_offdiag();
    let separates = min_offdiag.is_none_or(|k| k > tol);
    let is_metric = symmetric
        && zero_diagonal
        && non_negative
        && triangle_violation_count == 0
        && separates;

    SemimetricReport {
        symmetric,
        zero_diagonal,
        non_negative,
        triangle_violations,
        triangle_violation_count,
        is_metric,
        min_offdiag,
    }
}
