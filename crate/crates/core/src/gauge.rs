//! The triangular gauge: from a proximity matrix `φ` to the largest
//! walk-based pseudo-metric below it.
//!
//! For a non-increasing weight sequence `W` the gauge is
//!
//! ```text
//! d(a, b) = min over n >= 1 of  W_n * min { φ(a,c_1) + φ(c_1,c_2) + ... + φ(c_{n-1},b) }
//! ```
//!
//! where consecutive vertices of the walk differ (revisits further apart
//! are allowed). With all weights equal to one this is the metric closure
//! (all-pairs shortest paths on the complete graph) and is computed exactly.
//! For other sequences the infimum is truncated at walks of `max_order`
//! edges, using min-plus powers of `φ` with an infinite diagonal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, validate_semimetric, SemimetricReport, SquareMatrix};

pub const DEFAULT_MAX_ORDER: usize = 4;
pub const DEFAULT_CONV_TOL: f64 = 1e-9;

const BRUTE_FORCE_MAX_ENTITIES: usize = 8;
const BRUTE_FORCE_MAX_ORDER: usize = 5;

/// The weight sequence `W_1, W_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSpec", into = "WeightSpec")]
pub enum WeightKind {
    /// `W_i = 1`: exact metric closure.
    Ones,
    /// `W_i = 1 / i`.
    HarmonicInverse,
    /// Explicit prefix `W_1..W_k`; must cover the order used.
    Custom(Vec<f64>),
}

/// JSON spelling: `"ones"`, `"harmonic"` or an array of weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Named(String),
    List(Vec<f64>),
}

impl TryFrom<WeightSpec> for WeightKind {
    type Error = String;

    fn try_from(spec: WeightSpec) -> std::result::Result<Self, String> {
        match spec {
            WeightSpec::Named(name) => match name.as_str() {
                "ones" => Ok(WeightKind::Ones),
                "harmonic" => Ok(WeightKind::HarmonicInverse),
                other => Err(format!(
                    "unknown weight scheme `{other}` (expected \"ones\", \"harmonic\" or a list)"
                )),
            },
            WeightSpec::List(w) => Ok(WeightKind::Custom(w)),
        }
    }
}

impl From<WeightKind> for WeightSpec {
    fn from(kind: WeightKind) -> Self {
        match kind {
            WeightKind::Ones => WeightSpec::Named("ones".into()),
            WeightKind::HarmonicInverse => WeightSpec::Named("harmonic".into()),
            WeightKind::Custom(w) => WeightSpec::List(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub kind: WeightKind,
    /// The constant `Q` with `1/i <= Q * W_i`, checked up to the order used.
    pub metric_constant: Option<f64>,
}

impl WeightScheme {
    pub fn ones() -> Self {
        WeightScheme {
            kind: WeightKind::Ones,
            metric_constant: None,
        }
    }

    pub fn harmonic() -> Self {
        WeightScheme {
            kind: WeightKind::HarmonicInverse,
            metric_constant: None,
        }
    }

    pub fn custom(weights: Vec<f64>) -> Self {
        WeightScheme {
            kind: WeightKind::Custom(weights),
            metric_constant: None,
        }
    }

    pub fn with_metric_constant(mut self, q: f64) -> Self {
        self.metric_constant = Some(q);
        self
    }

    /// `W_1..W_order`, validated: positive, at most one, non-increasing,
    /// and compatible with the metric constant if one is set.
    pub fn weights(&self, order: usize) -> Result<Vec<f64>> {
        if order == 0 {
            return Err(Error::Parameter("order must be at least 1".into()));
        }
        let w: Vec<f64> = match &self.kind {
            WeightKind::Ones => vec![1.0; order],
            WeightKind::HarmonicInverse => (1..=order).map(|i| 1.0 / i as f64).collect(),
            WeightKind::Custom(list) => {
                if list.len() < order {
                    return Err(Error::Parameter(format!(
                        "custom weight list has {} entries but order {order} was requested",
                        list.len()
                    )));
                }
                list[..order].to_vec()
            }
        };
        for (i, &wi) in w.iter().enumerate() {
            if !(wi > 0.0 && wi <= 1.0) {
                return Err(Error::Parameter(format!(
                    "weight W_{} = {wi} is outside (0, 1]",
                    i + 1
                )));
            }
            if i > 0 && wi > w[i - 1] {
                return Err(Error::Parameter(format!(
                    "weights must be non-increasing: W_{} = {} < W_{} = {wi}",
                    i,
                    w[i - 1],
                    i + 1
                )));
            }
        }
        if let Some(q) = self.metric_constant {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Parameter(format!("metric constant Q = {q} must be positive")));
            }
            for (i, &wi) in w.iter().enumerate() {
                let step = (i + 1) as f64;
                if 1.0 / step > q * wi {
                    return Err(Error::Parameter(format!(
                        "1/{step} > Q * W_{step} = {}: the metric constant does not hold",
                        q * wi
                    )));
                }
            }
        }
        Ok(w)
    }
}

impl Default for WeightScheme {
    fn default() -> Self {
        Self::ones()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderUsed {
    ExactClosure,
    Truncated(usize),
}

impl Serialize for OrderUsed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OrderUsed::ExactClosure => s.serialize_str("exact-closure"),
            OrderUsed::Truncated(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl std::fmt::Display for OrderUsed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderUsed::ExactClosure => f.write_str("exact-closure"),
            OrderUsed::Truncated(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeResult {
    pub distances: SquareMatrix,
    pub order_used: OrderUsed,
    /// Exact closure, or the last order changed no entry by more than `conv_tol`.
    /// Always false for a truncation at order 1.
    pub converged: bool,
    pub max_change: f64,
    pub triangle_report: SemimetricReport,
}

/// Computes the gauge of `phi` under `w`.
///
/// `phi` must be symmetric with zero diagonal and non-negative entries
/// (within [`matrix::DEFAULT_TOL`]).
pub fn triangular_gauge(
    phi: &SquareMatrix,
    w: &WeightScheme,
    max_order: usize,
    conv_tol: f64,
) -> Result<GaugeResult> {
    check_proximity(phi)?;
    if max_order < 1 {
        return Err(Error::Parameter("max_order must be at least 1".into()));
    }
    if !(conv_tol >= 0.0) {
        return Err(Error::Parameter("conv_tol must be non-negative".into()));
    }
    let weights = w.weights(max_order)?;

    let (distances, order_used, converged, max_change) = if w.kind == WeightKind::Ones {
        (metric_closure(phi), OrderUsed::ExactClosure, true, 0.0)
    } else {
        let seq = truncated_sequence(phi, &weights);
        let last = seq.last().cloned().unwrap_or_else(|| phi.clone());
        let change = if seq.len() >= 2 {
            last.max_abs_diff(&seq[seq.len() - 2])?
        } else {
            f64::INFINITY
        };
        let converged = seq.len() >= 2 && change <= conv_tol;
        (last, OrderUsed::Truncated(max_order), converged, change)
    };
    let triangle_report = validate_semimetric(&distances, matrix::DEFAULT_TOL);
    Ok(GaugeResult {
        distances,
        order_used,
        converged,
        max_change: if max_change.is_finite() { max_change } else { 0.0 },
        triangle_report,
    })
}

/// `d(1), d(2), ..., d(max_order)` for the scheme `w`, each symmetric with a
/// zero diagonal. For `Ones` the truncations are returned as well (they
/// reach the exact closure once the order is at least `n - 1`).
pub fn gauge_sequence(phi: &SquareMatrix, w: &WeightScheme, max_order: usize) -> Result<Vec<SquareMatrix>> {
    check_proximity(phi)?;
    let weights = w.weights(max_order)?;
    Ok(truncated_sequence(phi, &weights))
}

fn check_proximity(phi: &SquareMatrix) -> Result<()> {
    if !phi.is_finite() {
        return Err(Error::Validation("proximity matrix has non-finite entries".into()));
    }
    let r = validate_semimetric_shape(phi);
    if !r.0 {
        return Err(Error::Validation("proximity matrix is not symmetric".into()));
    }
    if !r.1 {
        return Err(Error::Validation("proximity matrix has a non-zero diagonal".into()));
    }
    if !r.2 {
        return Err(Error::Validation("proximity matrix has negative entries".into()));
    }
    Ok(())
}

// (symmetric, zero diagonal, non-negative) without the O(n³) triangle scan.
fn validate_semimetric_shape(m: &SquareMatrix) -> (bool, bool, bool) {
    let tol = matrix::DEFAULT_TOL;
    let n = m.order();
    let mut out = (true, true, true);
    for i in 0..n {
        if m.get(i, i).abs() > tol {
            out.1 = false;
        }
        for j in 0..n {
            if m.get(i, j) < -tol {
                out.2 = false;
            }
            if j > i && (m.get(i, j) - m.get(j, i)).abs() > tol {
                out.0 = false;
            }
        }
    }
    out
}

/// All-pairs shortest paths over the complete graph weighted by `phi`
/// (Floyd–Warshall, rows relaxed in parallel for each pivot).
pub fn metric_closure(phi: &SquareMatrix) -> SquareMatrix {
    let n = phi.order();
    let mut d: Vec<f64> = phi.as_slice().to_vec();
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    let mut pivot = vec![0.0; n];
    for k in 0..n {
        pivot.copy_from_slice(&d[k * n..(k + 1) * n]);
        d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if i == k {
                return;
            }
            let ik = row[k];
            for (x, &kj) in row.iter_mut().zip(&pivot) {
                let cand = ik + kj;
                if cand < *x {
                    *x = cand;
                }
            }
        });
    }
    SquareMatrix::from_vec(n, d).expect("closure keeps the order")
}

fn truncated_sequence(phi: &SquareMatrix, weights: &[f64]) -> Vec<SquareMatrix> {
    let n = phi.order();
    let mut step = phi.clone();
    step.set_diagonal(f64::INFINITY);

    let mut walks = step.clone();
    let mut best = SquareMatrix::from_fn(n, |i, j| weights[0] * walks.get(i, j));
    let mut out = Vec::with_capacity(weights.len());
    out.push(finish(&best));
    for &wn in &weights[1..] {
        walks = matrix::min_plus_unchecked(&walks, &step);
        for i in 0..n {
            for j in 0..n {
                let cand = wn * walks.get(i, j);
                if cand < best.get(i, j) {
                    best.set(i, j, cand);
                }
            }
        }
        out.push(finish(&best));
    }
    out
}

// Symmetrize by the smaller of the two walk values and zero the diagonal.
fn finish(best: &SquareMatrix) -> SquareMatrix {
    let n = best.order();
    SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            best.get(i, j).min(best.get(j, i))
        }
    })
}

/// Reference implementation of the truncated gauge by literal enumeration of
/// every walk with consecutive-distinct vertices of each length up to
/// `max_order`. Limited to 8 entities and order 5.
pub fn brute_force_gauge(phi: &SquareMatrix, w: &WeightScheme, max_order: usize) -> Result<SquareMatrix> {
    let n = phi.order();
    if n > BRUTE_FORCE_MAX_ENTITIES || max_order > BRUTE_FORCE_MAX_ORDER {
        return Err(Error::Parameter(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_ENTITIES} entities and order \
             {BRUTE_FORCE_MAX_ORDER} (got {n} and {max_order})"
        )));
    }
    let weights = w.weights(max_order)?;
    let mut out = SquareMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut best = f64::INFINITY;
            for (len, wn) in weights.iter().enumerate() {
                let walk = cheapest_walk(phi, a, b, len + 1);
                best = best.min(wn * walk);
            }
            out.set(a, b, best);
        }
    }
    Ok(out)
}

fn cheapest_walk(phi: &SquareMatrix, from: usize, to: usize, edges: usize) -> f64 {
    if edges == 1 {
        return if from == to { f64::INFINITY } else { phi.get(from, to) };
    }
    let mut best = f64::INFINITY;
    for c in 0..phi.order() {
        if c == from {
            continue;
        }
        let rest = cheapest_walk(phi, c, to, edges - 1);
        best = best.min(phi.get(from, c) + rest);
    }
    best
}

/// Smallest off-diagonal proximity: the value the harmonic gauge tends to
/// as the order grows (walks bouncing on the cheapest edge). `None` for a
/// single entity.
pub fn gauge_asymptote(phi: &SquareMatrix) -> Option<f64> {
    phi.min_offdiag()
}

/// `D = lambda * d_e + d_phi`.
pub fn combined_distance(d_e: &SquareMatrix, d_phi: &SquareMatrix, lambda: f64) -> Result<SquareMatrix> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be non-negative")));
    }
    if d_e.order() != d_phi.order() {
        return Err(Error::Dimension(format!(
            "Euclidean component has order {}, gauge component {}",
            d_e.order(),
            d_phi.order()
        )));
    }
    for (name, m) in [("Euclidean", d_e), ("gauge", d_phi)] {
        let (sym, diag, _) = validate_semimetric_shape(m);
        if !(sym && diag) {
            return Err(Error::Validation(format!(
                "{name} component must be symmetric with zero diagonal"
            )));
        }
    }
    d_e.scaled_add(lambda, d_phi)
}
