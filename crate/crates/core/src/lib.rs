//! Post-processing toolkit for structure-based virtual screening.
//!
//! Takes per-ligand score tables produced by docking engines and rescoring
//! functions and turns them into filtered, weighted rank-consensus rankings
//! and supervised ML re-rankings, evaluated with early-enrichment metrics
//! (EF@x%, BEDROC, ROC-AUC) and classical classification metrics.
//!
//! The numeric core is generic over the scalar type via [`Real`]
//! (`f32`/`f64`); the file-facing layers (score tables, config files) are
//! pinned to `f64`. Concrete `f64` instantiations of the generic types are
//! aliased at the crate root.

pub mod data;
pub mod error;
pub mod metrics;
pub mod ml;
pub mod num;
pub mod rank;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` instantiations used by the CLI and the on-disk formats.
pub type RankedLibrary64 = metrics::RankedLibrary<f64>;
pub type MetricsReport64 = metrics::MetricsReport<f64>;
pub type ClassicalMetrics64 = metrics::ClassicalMetrics<f64>;
pub type SummaryRow64 = metrics::SummaryRow<f64>;
pub type FeatureMatrix64 = ml::FeatureMatrix<f64>;
pub type ScalerParams64 = ml::ScalerParams<f64>;
pub type NetConfig64 = ml::NetConfig<f64>;
pub type TrainedModel64 = ml::TrainedModel<f64>;
