//! Population estimation from opportunistically shared wildlife photographs.
//!
//! Photographers post only part of what they shoot. A model trained on full
//! memory-card sets predicts what fraction of a collection's individuals made
//! it into the shared album, and that fraction rescales the capture counts
//! fed to a Jolly-Seber estimator.

pub mod bias;
pub mod data;
pub mod dataset;
pub mod evaluation;
pub mod features;
pub mod jolly_seber;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use bias::{BiasError, PooledCoefficient, ShareEstimate};
pub use data::{
    Collection, DataError, EncounterMatrix, ImageRecord, Occasion, RecordFormat, SurveyLabel,
};
pub use dataset::{ColumnStats, Dataset, Matrix};
pub use evaluation::{CvPlan, EvalError, EvalReport, Metric, MetricSummary, Protocol};
pub use features::{FeatureError, FeatureLevel, FeatureSchema, FeatureVector};
pub use jolly_seber::{
    EstimatorError, Inestimable, JsVariant, OccasionEstimate, OccasionStatistics,
    PopulationEstimate,
};
pub use models::{LearnerKind, LearnerSpec, Model, ModelError, Task};
