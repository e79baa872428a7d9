//! Builders that turn raw entity data into proximity and pseudo-metric
//! matrices.
//!
//! * [`build_cosine_proximity`]: unit-normalized feature rows, their Gram
//!   (correlation) matrix `A` and the proximity `1 - A`.
//! * [`build_cooccurrence_proximity`]: share of documents in which two
//!   entities do *not* appear together.
//! * [`build_field_metric`]: per-column metrics (absolute difference,
//!   discrete indicator, masked) combined by sum or by Euclidean norm.
//! * [`build_normalized_euclidean`]: `‖v_a - v_b‖ / max_c ‖v_c‖`.
//!
//! Every builder returns a symmetric, non-negative matrix with an exact zero
//! diagonal.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    #[default]
    Numeric,
    /// Integer codes; equal codes mean equal categories.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMeta {
    pub name: String,
    #[serde(default)]
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// `N` entities with an `M`-vector of real-valued properties each.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityTable {
    ids: Vec<String>,
    features: Vec<Vec<f64>>,
    columns: Vec<ColumnMeta>,
}

impl EntityTable {
    pub fn new(ids: Vec<String>, features: Vec<Vec<f64>>, columns: Vec<ColumnMeta>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Validation("entity table has no entities".into()));
        }
        if columns.is_empty() {
            return Err(Error::Validation("entity table has no feature columns".into()));
        }
        if ids.len() != features.len() {
            return Err(Error::Dimension(format!(
                "{} ids but {} feature rows",
                ids.len(),
                features.len()
            )));
        }
        check_unique(&ids)?;
        for (id, row) in ids.iter().zip(&features) {
            if row.len() != columns.len() {
                return Err(Error::Dimension(format!(
                    "entity `{id}` has {} values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("entity `{id}` has non-finite value {v}")));
            }
        }
        Ok(EntityTable {
            ids,
            features,
            columns,
        })
    }

    /// Table with numeric columns named `x1..xM`.
    pub fn from_rows(ids: Vec<String>, features: Vec<Vec<f64>>) -> Result<Self> {
        let m = features.first().map_or(0, Vec::len);
        let columns = (1..=m)
            .map(|c| ColumnMeta {
                name: format!("x{c}"),
                kind: ColumnKind::Numeric,
                unit: None,
            })
            .collect();
        Self::new(ids, features, columns)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// The table with entity `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::Index {
                index,
                len: self.len(),
            });
        }
        let mut ids = self.ids.clone();
        let mut features = self.features.clone();
        ids.remove(index);
        features.remove(index);
        Self::new(ids, features, self.columns.clone())
    }
}

/// Counts `C(a, m)` of how often entity `a` appears in document `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentCorpus {
    entity_ids: Vec<String>,
    doc_ids: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl DocumentCorpus {
    pub fn new(entity_ids: Vec<String>, doc_ids: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if entity_ids.is_empty() || doc_ids.is_empty() {
            return Err(Error::Validation("document corpus is empty".into()));
        }
        check_unique(&entity_ids)?;
        check_unique(&doc_ids)?;
        if counts.len() != entity_ids.len() {
            return Err(Error::Dimension(format!(
                "{} entities but {} count rows",
                entity_ids.len(),
                counts.len()
            )));
        }
        for (id, row) in entity_ids.iter().zip(&counts) {
            if row.len() != doc_ids.len() {
                return Err(Error::Dimension(format!(
                    "entity `{id}` has {} counts, expected {}",
                    row.len(),
                    doc_ids.len()
                )));
            }
            if row.iter().all(|&c| c == 0) {
                return Err(Error::Validation(format!(
                    "entity `{id}` does not appear in any document"
                )));
            }
        }
        Ok(DocumentCorpus {
            entity_ids,
            doc_ids,
            counts,
        })
    }

    /// Builds a corpus from `(entity, document, count)` triples. Entities
    /// and documents keep first-appearance order; repeated pairs add up.
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, u64)>) -> Result<Self> {
        let mut entity_ids: Vec<String> = Vec::new();
        let mut doc_ids: Vec<String> = Vec::new();
        let mut entity_pos: HashMap<String, usize> = HashMap::new();
        let mut doc_pos: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<(usize, usize, u64)> = Vec::new();
        for (e, d, c) in triples {
            let ei = *entity_pos.entry(e.to_string()).or_insert_with(|| {
                entity_ids.push(e.to_string());
                entity_ids.len() - 1
            });
            let di = *doc_pos.entry(d.to_string()).or_insert_with(|| {
                doc_ids.push(d.to_string());
                doc_ids.len() - 1
            });
            cells.push((ei, di, c));
        }
        let mut counts = vec![vec![0u64; doc_ids.len()]; entity_ids.len()];
        for (ei, di, c) in cells {
            counts[ei][di] += c;
        }
        Self::new(entity_ids, doc_ids, counts)
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.entity_ids.iter().position(|x| x == id)
    }

    /// Number of documents in which both entities have a positive count.
    pub fn shared_documents(&self, a: usize, b: usize) -> usize {
        self.counts[a]
            .iter()
            .zip(&self.counts[b])
            .filter(|(x, y)| **x > 0 && **y > 0)
            .count()
    }

    /// The corpus with entity `index` removed; the document set is kept.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::Index {
                index,
                len: self.len(),
            });
        }
        let mut ids = self.entity_ids.clone();
        let mut counts = self.counts.clone();
        ids.remove(index);
        counts.remove(index);
        Self::new(ids, self.doc_ids.clone(), counts)
    }

    /// Count rows as an entity table with one numeric column per document.
    pub fn to_entity_table(&self) -> Result<EntityTable> {
        let columns = self
            .doc_ids
            .iter()
            .map(|d| ColumnMeta {
                name: d.clone(),
                kind: ColumnKind::Numeric,
                unit: Some("count".into()),
            })
            .collect();
        let features = self
            .counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64).collect())
            .collect();
        EntityTable::new(self.entity_ids.clone(), features, columns)
    }

    fn support(&self, a: usize) -> Vec<bool> {
        self.counts[a].iter().map(|&c| c > 0).collect()
    }
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Validation(format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

/// Output of the cosine (correlation) model.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineProximity {
    /// `1 - corr` with an exact zero diagonal.
    pub phi: SquareMatrix,
    /// Gram matrix of the unit-normalized feature rows.
    pub corr: SquareMatrix,
    pub warnings: Vec<String>,
}

/// Normalizes every feature row to unit length and returns `A = Ĉ Ĉᵀ`
/// together with the proximity `Φ = 1 - A`.
pub fn build_cosine_proximity(t: &EntityTable) -> Result<CosineProximity> {
    let normalized: Vec<Vec<f64>> = t
        .features
        .iter()
        .zip(&t.ids)
        .map(|(row, id)| {
            let norm = euclidean_norm(row);
            if norm > 0.0 {
                Ok(row.iter().map(|v| v / norm).collect())
            } else {
                Err(Error::Validation(format!(
                    "entity `{id}` has a zero feature vector and cannot be normalized"
                )))
            }
        })
        .collect::<Result<_>>()?;

    let corr = pairwise(t.len(), 1.0, |i, j| dot(&normalized[i], &normalized[j]));
    let mut phi = SquareMatrix::from_fn(t.len(), |i, j| 1.0 - corr.get(i, j));
    phi.set_diagonal(0.0);

    let mut warnings = Vec::new();
    if t.features.iter().flatten().any(|&v| v < 0.0) {
        warnings.push(
            "feature table has negative values: cosine proximities may exceed 1 (range [0, 2])"
                .to_string(),
        );
    }
    Ok(CosineProximity {
        phi,
        corr,
        warnings,
    })
}

/// `φ_M(a, b) = (M - M_ab) / M`, where `M_ab` counts documents shared by
/// `a` and `b`. The diagonal is set to zero.
pub fn build_cooccurrence_proximity(c: &DocumentCorpus) -> Result<SquareMatrix> {
    let m = c.doc_ids.len();
    if m == 0 || c.is_empty() {
        return Err(Error::Validation("document corpus is empty".into()));
    }
    let total = m as f64;
    let supports: Vec<Vec<bool>> = (0..c.len()).map(|a| c.support(a)).collect();
    Ok(pairwise(c.len(), 0.0, |a, b| {
        let shared = supports[a]
            .iter()
            .zip(&supports[b])
            .filter(|(x, y)| **x && **y)
            .count();
        (total - shared as f64) / total
    }))
}

/// One merge performed by [`merge_duplicates`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub kept: String,
    pub absorbed: Vec<String>,
}

/// Merges entities whose document supports are identical into one row,
/// named by the lexicographically smallest id, with counts summed. The
/// merged row sits where the group first appears.
pub fn merge_duplicates(c: &DocumentCorpus) -> (DocumentCorpus, Vec<MergeRecord>) {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut by_support: HashMap<Vec<bool>, usize> = HashMap::new();
    for a in 0..c.len() {
        let g = *by_support.entry(c.support(a)).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(a);
    }

    let mut ids = Vec::with_capacity(groups.len());
    let mut counts = Vec::with_capacity(groups.len());
    let mut log = Vec::new();
    for members in &groups {
        let mut names: Vec<&String> = members.iter().map(|&a| &c.entity_ids[a]).collect();
        names.sort();
        let kept = names[0].clone();
        let mut row = vec![0u64; c.doc_ids.len()];
        for &a in members {
            for (acc, v) in row.iter_mut().zip(&c.counts[a]) {
                *acc += v;
            }
        }
        if members.len() > 1 {
            log.push(MergeRecord {
                kept: kept.clone(),
                absorbed: names[1..].iter().map(|s| s.to_string()).collect(),
            });
        }
        ids.push(kept);
        counts.push(row);
    }
    let merged = DocumentCorpus {
        entity_ids: ids,
        doc_ids: c.doc_ids.clone(),
        counts,
    };
    (merged, log)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMetricKind {
    /// `|x - y|`
    AbsoluteDifference,
    /// 0 when equal, 1 otherwise.
    DiscreteIndicator,
    /// Contributes nothing.
    Masked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMetric {
    pub kind: FieldMetricKind,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// How per-column contributions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    /// Sum of the per-column metrics.
    #[default]
    Sum,
    /// Euclidean norm of the per-column contributions (masked seminorms).
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMetricSchema {
    pub columns: Vec<FieldMetric>,
    #[serde(default)]
    pub combine: Combine,
}

impl FieldMetricSchema {
    pub fn new(columns: Vec<FieldMetric>, combine: Combine) -> Result<Self> {
        let s = FieldMetricSchema { columns, combine };
        s.validate()?;
        Ok(s)
    }

    /// Euclidean seminorm over the selected coordinates; the rest are masked.
    pub fn masked_euclidean(width: usize, selected: &[usize]) -> Result<Self> {
        let columns = (0..width)
            .map(|c| FieldMetric {
                kind: if selected.contains(&c) {
                    FieldMetricKind::AbsoluteDifference
                } else {
                    FieldMetricKind::Masked
                },
                scale: 1.0,
            })
            .collect();
        Self::new(columns, Combine::Euclidean)
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .columns
            .iter()
            .all(|c| c.kind == FieldMetricKind::Masked)
        {
            return Err(Error::Validation(
                "field metric schema masks every column".into(),
            ));
        }
        if let Some(c) = self.columns.iter().find(|c| !(c.scale.is_finite() && c.scale >= 0.0)) {
            return Err(Error::Validation(format!(
                "column scale must be finite and non-negative, got {}",
                c.scale
            )));
        }
        Ok(())
    }
}

/// Applies the per-column metrics of `s` to every pair of rows of `t`.
pub fn build_field_metric(t: &EntityTable, s: &FieldMetricSchema) -> Result<SquareMatrix> {
    if s.columns.len() != t.width() {
        return Err(Error::Dimension(format!(
            "schema has {} columns, table has {}",
            s.columns.len(),
            t.width()
        )));
    }
    s.validate()?;
    let rows = &t.features;
    Ok(pairwise(t.len(), 0.0, |i, j| {
        let parts = s.columns.iter().zip(rows[i].iter().zip(&rows[j])).map(|(col, (x, y))| {
            let raw = match col.kind {
                FieldMetricKind::AbsoluteDifference => (x - y).abs(),
                FieldMetricKind::DiscreteIndicator => {
                    if x == y {
                        0.0
                    } else {
                        1.0
                    }
                }
                FieldMetricKind::Masked => 0.0,
            };
            raw * col.scale
        });
        match s.combine {
            Combine::Sum => parts.sum(),
            Combine::Euclidean => parts.map(|p| p * p).sum::<f64>().sqrt(),
        }
    }))
}

/// `d_E(a, b) = ‖v_a - v_b‖₂ / max_c ‖v_c‖₂`.
pub fn build_normalized_euclidean(t: &EntityTable) -> Result<SquareMatrix> {
    let max_norm = t
        .features
        .iter()
        .map(|r| euclidean_norm(r))
        .fold(0.0, f64::max);
    if max_norm <= 0.0 {
        return Err(Error::Validation(
            "every feature vector is zero; the Euclidean component is undefined".into(),
        ));
    }
    let rows = &t.features;
    Ok(pairwise(t.len(), 0.0, |i, j| {
        let sq: f64 = rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        sq.sqrt() / max_norm
    }))
}

fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluates `f` on the strict upper triangle (rows in parallel), mirrors it
/// and places `diagonal` on the diagonal. Exactly symmetric by construction.
fn pairwise(n: usize, diagonal: f64, f: impl Fn(usize, usize) -> f64 + Sync) -> SquareMatrix {
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
        .collect();
    let mut m = SquareMatrix::filled(n, diagonal);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}
