//! The run configuration, a single strict JSON document.
//!
//! ```json
//! {
//!   "builder": "cosine",
//!   "weights": "ones",
//!   "max_order": 4,
//!   "lambda": 1.0,
//!   "density": { "r": "auto", "q": 2.0, "nu": "lebesgue", "z_threshold": 2.0 },
//!   "tolerances": { "validation": 1e-9, "spectral_eps": 1e-6, "spectral_delta": 1e-6 }
//! }
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::Path;

use metricgraph_core::gauge::{DEFAULT_CONV_TOL, DEFAULT_MAX_ORDER};
use metricgraph_core::matrix::DEFAULT_TOL;
use metricgraph_core::netapps::{DEFAULT_SPECTRAL_DELTA, DEFAULT_SPECTRAL_EPS};
use metricgraph_core::{
    Builder, DensityRequest, Error, FieldMetricSchema, FlagBasis, MassMeasure, Pipeline,
    RadialWeight, Radius, Result, WeightKind, WeightScheme,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderName {
    #[default]
    Cosine,
    Cooccurrence,
    Euclidean,
    #[serde(alias = "field_metric")]
    FieldMetric,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub builder: BuilderName,
    /// Column schema, required by the `field-metric` builder.
    #[serde(default)]
    pub field_metric: Option<FieldMetricSchema>,
    #[serde(default = "default_weights")]
    pub weights: WeightKind,
    #[serde(default)]
    pub metric_constant: Option<f64>,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub merge_duplicates: bool,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default = "auto")]
    pub r: Radius,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default = "lebesgue")]
    pub nu: MassMeasure,
    #[serde(default = "two")]
    pub z_threshold: f64,
    #[serde(default)]
    pub flag_basis: FlagBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_validation_tol")]
    pub validation: f64,
    #[serde(default = "default_spectral_eps")]
    pub spectral_eps: f64,
    #[serde(default = "default_spectral_delta")]
    pub spectral_delta: f64,
}

fn default_weights() -> WeightKind {
    WeightKind::Ones
}
fn default_max_order() -> usize {
    DEFAULT_MAX_ORDER
}
fn default_conv_tol() -> f64 {
    DEFAULT_CONV_TOL
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn auto() -> Radius {
    Radius::Auto
}
fn lebesgue() -> MassMeasure {
    MassMeasure::Lebesgue
}
fn default_validation_tol() -> f64 {
    DEFAULT_TOL
}
fn default_spectral_eps() -> f64 {
    DEFAULT_SPECTRAL_EPS
}
fn default_spectral_delta() -> f64 {
    DEFAULT_SPECTRAL_DELTA
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            r: auto(),
            q: two(),
            nu: lebesgue(),
            z_threshold: two(),
            flag_basis: FlagBasis::default(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            validation: DEFAULT_TOL,
            spectral_eps: DEFAULT_SPECTRAL_EPS,
            spectral_delta: DEFAULT_SPECTRAL_DELTA,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("config: {e}"),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
            }
            None => Ok(Self::default()),
        }
    }

    fn check(&self) -> Result<()> {
        match (self.builder, &self.field_metric) {
            (BuilderName::FieldMetric, None) => {
                return Err(Error::Parameter(
                    "builder `field-metric` needs a `field_metric` schema".into(),
                ))
            }
            (BuilderName::FieldMetric, Some(schema)) => schema.validate()?,
            (_, Some(_)) => {
                return Err(Error::Parameter(
                    "`field_metric` is only used by the `field-metric` builder".into(),
                ))
            }
            _ => {}
        }
        if self.max_order < 1 {
            return Err(Error::Parameter("max_order must be at least 1".into()));
        }
        if !(self.conv_tol >= 0.0) {
            return Err(Error::Parameter("conv_tol must be non-negative".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter("lambda must be a non-negative number".into()));
        }
        let t = &self.tolerances;
        if !(t.validation >= 0.0) || !(t.spectral_eps > 0.0) || !(t.spectral_delta > 0.0) {
            return Err(Error::Parameter(
                "tolerances must be positive (validation may be zero)".into(),
            ));
        }
        if let Radius::Value(r) = self.density.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Parameter(format!("density radius must be positive, got {r}")));
            }
        }
        RadialWeight::new(self.density.q)?;
        Ok(())
    }

    pub fn pipeline(&self) -> Pipeline {
        let builder = match self.builder {
            BuilderName::Cosine => Builder::Cosine,
            BuilderName::Cooccurrence => Builder::Cooccurrence,
            BuilderName::Euclidean => Builder::Euclidean,
            BuilderName::FieldMetric => {
                Builder::FieldMetric(self.field_metric.clone().expect("checked at load"))
            }
            BuilderName::Matrix => Builder::Matrix,
        };
        let mut weights = WeightScheme {
            kind: self.weights.clone(),
            metric_constant: None,
        };
        if let Some(q) = self.metric_constant {
            weights = weights.with_metric_constant(q);
        }
        Pipeline {
            builder,
            weights,
            max_order: self.max_order,
            conv_tol: self.conv_tol,
            lambda: self.lambda,
            merge_duplicates: self.merge_duplicates,
        }
    }

    pub fn density_request(&self) -> Result<DensityRequest> {
        let d = &self.density;
        Ok(DensityRequest {
            r: d.r,
            psi: RadialWeight::new(d.q)?,
            nu: d.nu,
            z_threshold: d.z_threshold,
            basis: d.flag_basis,
        })
    }
}
