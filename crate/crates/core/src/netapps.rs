//! Queries on a finished distance matrix: neighborhoods, the influence of a
//! single entity on the graph distance, nearest elements of a subset, and
//! the spectral reduction of entities with equivalent behavior.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::OrderUsed;
use crate::matrix::{frobenius_norm, symmetric_eigh, SquareMatrix, DEFAULT_MAX_SWEEPS, DEFAULT_RESIDUAL_TOL};
use crate::pipeline::{DataSource, Pipeline};

pub const DEFAULT_SPECTRAL_EPS: f64 = 1e-6;
pub const DEFAULT_SPECTRAL_DELTA: f64 = 1e-6;

const PSD_TOL: f64 = 1e-9;

/// Entities `b != a` with `d(a, b) < eps`, nearest first (ties by ordinal).
pub fn neighbors(d: &SquareMatrix, a: usize, eps: f64) -> Result<Vec<(usize, f64)>> {
    if a >= d.order() {
        return Err(Error::Index {
            index: a,
            len: d.order(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {eps}")));
    }
    let mut out: Vec<(usize, f64)> = (0..d.order())
        .filter(|&b| b != a && d.get(a, b) < eps)
        .map(|b| (b, d.get(a, b)))
        .collect();
    out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    Ok(out)
}

/// Every `b` in `subset` minimizing `d(a, b)`, sorted by ordinal.
pub fn nearest_in_subset(d: &SquareMatrix, a: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let n = d.order();
    if subset.is_empty() {
        return Err(Error::Parameter("subset must not be empty".into()));
    }
    for &i in std::iter::once(&a).chain(subset) {
        if i >= n {
            return Err(Error::Index { index: i, len: n });
        }
    }
    if subset.contains(&a) {
        return Err(Error::Parameter(format!("entity {a} belongs to the subset")));
    }
    let best = subset
        .iter()
        .map(|&b| d.get(a, b))
        .fold(f64::INFINITY, f64::min);
    let mut out: Vec<usize> = subset.iter().copied().filter(|&b| d.get(a, b) == best).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceReport {
    pub entity: usize,
    pub id: String,
    /// `‖D_a - D(-a)‖_F`.
    pub influence: f64,
    pub recompute_order: OrderUsed,
}

/// Runs `pipeline` on the full data and on the data without entity `id`,
/// and returns the Frobenius norm of the difference between the full
/// distance matrix with row/column `id` deleted and the recomputed one.
///
/// Duplicate merging is switched off for both runs so that the two
/// matrices describe the same entities.
pub fn influence(pipeline: &Pipeline, source: &DataSource, id: &str) -> Result<InfluenceReport> {
    let a = source
        .position(id)
        .ok_or_else(|| Error::Lookup(id.to_string()))?;
    if source.len() < 3 {
        return Err(Error::Parameter(format!(
            "influence needs at least 3 entities, got {}",
            source.len()
        )));
    }
    let pipeline = Pipeline {
        merge_duplicates: false,
        ..pipeline.clone()
    };
    let full = pipeline.run(source)?;
    let reduced = pipeline.run(&source.without(a)?)?;
    let d_a = full.d.without(a)?;
    let diff = d_a.scaled_add(-1.0, &reduced.d)?;
    Ok(InfluenceReport {
        entity: a,
        id: id.to_string(),
        influence: frobenius_norm(&diff),
        recompute_order: reduced.gauge.order_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralClasses {
    /// Eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Number of eigenvalues below `eps`.
    pub subspace_dim: usize,
    /// Entities that repeat the behavior of a kept representative.
    pub redundant: Vec<usize>,
    pub representatives: BTreeMap<usize, usize>,
    /// Per entity: the smallest pair residual against any other entity.
    pub residuals: Vec<f64>,
    /// `[kept, absorbed...]` for every representative that absorbed someone.
    pub classes: Vec<Vec<usize>>,
}

/// Equivalence classes of entities with the same behavior, read off the
/// near-null space `S_eps` of the correlation matrix `A`.
///
/// Two entities `a`, `b` behave identically exactly when `e_a - e_b` lies in
/// the null space of `A` (their normalized rows coincide). The pair residual
/// is the norm of the component of `(e_a - e_b)/√2` outside `S_eps`,
///
/// ```text
/// res(a, b)² = ½ Σ_{λ_k ≥ eps} (u_k[a] - u_k[b])²,
/// ```
///
/// which lies in `[0, 1]`. Entities are visited in ordinal order; an entity
/// whose residual against some kept entity is below `delta` is redundant
/// and is assigned the kept entity of maximal correlation (lowest ordinal
/// on ties).
pub fn spectral_classes(corr: &SquareMatrix, eps: f64, delta: f64) -> Result<SpectralClasses> {
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::Parameter("eps and delta must be positive".into()));
    }
    let eig = symmetric_eigh(corr, DEFAULT_MAX_SWEEPS, DEFAULT_RESIDUAL_TOL)?;
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(&lowest) = eig.values.last() {
        if lowest < -PSD_TOL * scale {
            return Err(Error::Validation(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {lowest:e})"
            )));
        }
    }
    let n = corr.order();
    let significant: Vec<usize> = (0..n).filter(|&k| eig.values[k] >= eps).collect();
    let subspace_dim = n - significant.len();

    let pair_residual = |a: usize, b: usize| -> f64 {
        let s: f64 = significant
            .iter()
            .map(|&k| {
                let diff = eig.vectors.get(a, k) - eig.vectors.get(b, k);
                diff * diff
            })
            .sum();
        (0.5 * s).sqrt().min(1.0)
    };

    let residuals: Vec<f64> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| b != a)
                .map(|b| pair_residual(a, b))
                .fold(1.0, f64::min)
        })
        .collect();

    let mut kept: Vec<usize> = Vec::new();
    let mut representatives = BTreeMap::new();
    for a in 0..n {
        let mut rep: Option<usize> = None;
        for &b in &kept {
            if pair_residual(a, b) < delta {
                rep = match rep {
                    Some(r) if corr.get(a, r) >= corr.get(a, b) => Some(r),
                    _ => Some(b),
                };
            }
        }
        match rep {
            Some(r) => {
                representatives.insert(a, r);
            }
            None => kept.push(a),
        }
    }

    let redundant: Vec<usize> = representatives.keys().copied().collect();
    let classes = kept
        .iter()
        .filter_map(|&k| {
            let absorbed: Vec<usize> = representatives
                .iter()
                .filter(|(_, &r)| r == k)
                .map(|(&a, _)| a)
                .collect();
            (!absorbed.is_empty()).then(|| std::iter::once(k).chain(absorbed).collect())
        })
        .collect();

    Ok(SpectralClasses {
        eigenvalues: eig.values,
        subspace_dim,
        redundant,
        representatives,
        residuals,
        classes,
    })
}
