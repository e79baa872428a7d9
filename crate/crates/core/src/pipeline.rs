//! The end-to-end model: raw data → proximity `φ` → gauge `d_φ` → final
//! distance `D` (plus the Euclidean size component for the cosine model).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{self, GaugeResult, WeightScheme};
use crate::matrix::SquareMatrix;
use crate::proximity::{
    self, DocumentCorpus, EntityTable, FieldMetricSchema, MergeRecord,
};

/// Which builder produces `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    /// `1 - A` from unit-normalized rows; adds `lambda * d_E` to the gauge.
    Cosine,
    /// Document co-occurrence `(M - M_ab) / M`.
    Cooccurrence,
    /// Normalized Euclidean distance used directly as `φ`.
    Euclidean,
    /// Per-column metrics.
    FieldMetric(FieldMetricSchema),
    /// `φ` supplied as a matrix.
    Matrix,
}

impl Builder {
    pub fn name(&self) -> &'static str {
        match self {
            Builder::Cosine => "cosine",
            Builder::Cooccurrence => "cooccurrence",
            Builder::Euclidean => "euclidean",
            Builder::FieldMetric(_) => "field_metric",
            Builder::Matrix => "matrix",
        }
    }
}

/// Input data for a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Table(EntityTable),
    Corpus(DocumentCorpus),
    Matrix { ids: Vec<String>, matrix: SquareMatrix },
}

impl DataSource {
    pub fn ids(&self) -> &[String] {
        match self {
            DataSource::Table(t) => t.ids(),
            DataSource::Corpus(c) => c.entity_ids(),
            DataSource::Matrix { ids, .. } => ids,
        }
    }

    pub fn len(&self) -> usize {
        self.ids().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids().is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids().iter().position(|x| x == id)
    }

    /// The same data with entity `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        Ok(match self {
            DataSource::Table(t) => DataSource::Table(t.without(index)?),
            DataSource::Corpus(c) => DataSource::Corpus(c.without(index)?),
            DataSource::Matrix { ids, matrix } => {
                let mut ids = ids.clone();
                if index >= ids.len() {
                    return Err(Error::Index {
                        index,
                        len: ids.len(),
                    });
                }
                ids.remove(index);
                DataSource::Matrix {
                    ids,
                    matrix: matrix.without(index)?,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub builder: Builder,
    pub weights: WeightScheme,
    pub max_order: usize,
    pub conv_tol: f64,
    pub lambda: f64,
    /// Merge corpus entities with identical document supports before building.
    pub merge_duplicates: bool,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            builder: Builder::Cosine,
            weights: WeightScheme::ones(),
            max_order: gauge::DEFAULT_MAX_ORDER,
            conv_tol: gauge::DEFAULT_CONV_TOL,
            lambda: 1.0,
            merge_duplicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub ids: Vec<String>,
    pub phi: SquareMatrix,
    /// Correlation matrix `A`, for the cosine and co-occurrence builders.
    pub corr: Option<SquareMatrix>,
    /// Normalized Euclidean component, for the cosine builder.
    pub d_e: Option<SquareMatrix>,
    pub gauge: GaugeResult,
    pub d: SquareMatrix,
    pub merges: Vec<MergeRecord>,
    pub warnings: Vec<String>,
}

impl Pipeline {
    pub fn run(&self, source: &DataSource) -> Result<PipelineOutput> {
        let mut merges = Vec::new();
        let merged;
        let source = match (source, self.merge_duplicates) {
            (DataSource::Corpus(c), true) => {
                let (m, log) = proximity::merge_duplicates(c);
                merges = log;
                merged = DataSource::Corpus(m);
                &merged
            }
            _ => source,
        };

        let mut warnings = Vec::new();
        let (phi, corr, d_e) = match (&self.builder, source) {
            (Builder::Cosine, DataSource::Table(t)) => cosine(t, &mut warnings)?,
            (Builder::Cosine, DataSource::Corpus(c)) => cosine(&c.to_entity_table()?, &mut warnings)?,
            (Builder::Cooccurrence, DataSource::Corpus(c)) => {
                let corr = proximity::build_cosine_proximity(&c.to_entity_table()?)?.corr;
                (proximity::build_cooccurrence_proximity(c)?, Some(corr), None)
            }
            (Builder::Euclidean, DataSource::Table(t)) => {
                (proximity::build_normalized_euclidean(t)?, None, None)
            }
            (Builder::FieldMetric(schema), DataSource::Table(t)) => {
                (proximity::build_field_metric(t, schema)?, None, None)
            }
            (Builder::Matrix, DataSource::Matrix { matrix, .. }) => (matrix.clone(), None, None),
            (builder, _) => {
                return Err(Error::Validation(format!(
                    "builder `{}` cannot consume this kind of input",
                    builder.name()
                )))
            }
        };

        let gauge = gauge::triangular_gauge(&phi, &self.weights, self.max_order, self.conv_tol)?;
        if gauge.triangle_report.triangle_violation_count > 0 {
            warnings.push(format!(
                "gauge output at order {} has {} triangle violations",
                gauge.order_used,
                gauge.triangle_report.triangle_violation_count
            ));
        }
        let d = match &d_e {
            Some(de) => gauge::combined_distance(de, &gauge.distances, self.lambda)?,
            None => gauge.distances.clone(),
        };
        Ok(PipelineOutput {
            ids: source.ids().to_vec(),
            phi,
            corr,
            d_e,
            gauge,
            d,
            merges,
            warnings,
        })
    }
}

type Built = (SquareMatrix, Option<SquareMatrix>, Option<SquareMatrix>);

fn cosine(t: &EntityTable, warnings: &mut Vec<String>) -> Result<Built> {
    let p = proximity::build_cosine_proximity(t)?;
    warnings.extend(p.warnings);
    let de = proximity::build_normalized_euclidean(t)?;
    Ok((p.phi, Some(p.corr), Some(de)))
}
