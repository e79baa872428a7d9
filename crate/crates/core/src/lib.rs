//! Graph metrics for entity relationship analysis.
//!
//! Entities (companies, invoices, people) are the vertices of a complete
//! graph. A proximity function `φ` built from their data need not satisfy
//! the triangle inequality; the triangular gauge turns it into a
//! (pseudo)metric bounded above by `φ`. Local density and concentration of
//! mass on the resulting metric space flag entities whose neighborhood is
//! unexpectedly dense or sparse.
//!
//! The modules map onto the stages of that model:
//!
//! * [`matrix`]: dense kernels (min-plus, Jacobi eigensolver, validation).
//! * [`proximity`]: builders for `φ` and auxiliary pseudo-metrics.
//! * [`gauge`]: the triangular gauge and the combined distance.
//! * [`density`]: balls, density, concentration of mass, outlier flags.
//! * [`netapps`]: neighborhood, influence, nearest and spectral queries.
//! * [`pipeline`]: one call from raw data to the final distance.
//! * [`io`]: CSV formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod gauge;
pub mod io;
pub mod matrix;
pub mod netapps;
pub mod pipeline;
pub mod proximity;

pub use density::{
    ball, concentration, density_at, density_map, r_max, ConcentrationReport, DensityFlag,
    DensityProfile, DensityRequest, FlagBasis, MassMeasure, RadialWeight, Radius,
};
pub use error::{Error, Result};
pub use gauge::{
    brute_force_gauge, combined_distance, gauge_asymptote, triangular_gauge, GaugeResult,
    OrderUsed, WeightKind, WeightScheme,
};
pub use io::LabeledMatrix;
pub use matrix::{
    frobenius_norm, min_plus_product, symmetric_eigh, validate_semimetric, SemimetricReport,
    SquareMatrix, SymmetricEigen,
};
pub use netapps::{influence, nearest_in_subset, neighbors, spectral_classes, InfluenceReport, SpectralClasses};
pub use pipeline::{Builder, DataSource, Pipeline, PipelineOutput};
pub use proximity::{DocumentCorpus, EntityTable, FieldMetricSchema};
