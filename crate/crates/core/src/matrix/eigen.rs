use super::{frobenius_norm, SquareMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-9;
// Off-diagonal mass, relative to ‖m‖_F, below which the sweep loop stops.
const OFFDIAG_STOP: f64 = 1e-14;
// Components at or below this magnitude are skipped by the sign convention.
const SIGN_EPS: f64 = 1e-12;

/// Eigendecomposition `m = V diag(values) Vᵀ` of a symmetric matrix.
///
/// `vectors` holds the eigenvectors as columns, matched with `values`
/// (descending). Each eigenvector has its first component of magnitude
/// above `1e-12` non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
    pub sweeps: usize,
}

impl SymmetricEigen {
    /// Eigenvector `k` as an owned column.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.vectors.order();
        (0..n).map(|i| self.vectors.get(i, k)).collect()
    }

    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> SquareMatrix {
        let n = self.values.len();
        SquareMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Fails with a validation error if `m` is not symmetric within `1e-9`, and
/// with a convergence error (carrying the achieved relative residual) when
/// `max_sweeps` sweeps do not bring the reconstruction residual and the
/// orthonormality defect below `residual_tol`.
pub fn symmetric_eigh(
    m: &SquareMatrix,
    max_sweeps: usize,
    residual_tol: f64,
) -> Result<SymmetricEigen> {
    if max_sweeps == 0 {
        return Err(Error::Parameter("max_sweeps must be positive".into()));
    }
    if !(residual_tol > 0.0) {
        return Err(Error::Parameter("residual_tol must be positive".into()));
    }
    if !m.is_finite() {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let n = m.order();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(Error::Validation(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m.get(i, j),
                    m.get(j, i)
                )));
            }
        }
    }

    let mut a = SquareMatrix::from_fn(n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let mut v = SquareMatrix::identity(n);
    let norm = frobenius_norm(&a);

    let mut sweeps = 0;
    while sweeps < max_sweeps {
        if off_diagonal_norm(&a) <= OFFDIAG_STOP * norm {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|k| (a.get(k, k), k)).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = SquareMatrix::from_fn(n, |i, k| v.get(i, pairs[k].1));
    for k in 0..n {
        let flip = (0..n)
            .map(|i| vectors.get(i, k))
            .find(|x| x.abs() > SIGN_EPS)
            .is_some_and(|x| x < 0.0);
        if flip {
            for i in 0..n {
                let x = vectors.get(i, k);
                vectors.set(i, k, -x);
            }
        }
    }

    let eig = SymmetricEigen {
        values,
        vectors,
        sweeps,
    };
    let residual = relative_residual(m, &eig, norm);
    let ortho = orthonormality_defect(&eig.vectors);
    let achieved = residual.max(ortho);
    if achieved > residual_tol {
        return Err(Error::Convergence {
            sweeps,
            residual: achieved,
        });
    }
    Ok(eig)
}

fn off_diagonal_norm(a: &SquareMatrix) -> f64 {
    let n = a.order();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s.sqrt()
}

/// Applies the rotation annihilating `a[p][q]` to both `a` and the
/// accumulated eigenvector matrix `v`.
fn rotate(a: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.order();

    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);

    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

fn relative_residual(m: &SquareMatrix, eig: &SymmetricEigen, norm: f64) -> f64 {
    let rec = eig.reconstruct();
    let diff: f64 = m
        .as_slice()
        .iter()
        .zip(rec.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

fn orthonormality_defect(v: &SquareMatrix) -> f64 {
    let n = v.order();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let dot: f64 = (0..n).map(|i| v.get(i, a) * v.get(i, b)).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            s += (dot - target) * (dot - target);
        }
    }
    s.sqrt()
}
