//! Reliability-guided training for ordinal classification with
//! subjectively labeled data.
//!
//! The toolkit centers on a simple idea: when an auxiliary oracle (a remote
//! annotator service or the built-in rule-based one) re-labels a sample,
//! the disagreement between its prediction and the recorded label grades
//! how trustworthy that label is. A one-level disagreement marks the
//! sample *ambiguous*; agreement or a gap of two or more levels marks it
//! *confident*. Those reliability grades then steer training three ways:
//!
//! - **Soft targets** — ambiguous samples train against a two-point
//!   distribution (`alpha` on the recorded label, `1 - alpha` on the
//!   oracle's), everything else against the one-hot label.
//! - **Loss weighting** — ambiguous samples contribute less to each batch.
//! - **Curriculum staging** — the two-stage regime trains on confident
//!   samples first, folding ambiguous ones in afterwards, with
//!   weight-guided segment-recombination augmentation at the second
//!   stage's start.
//!
//! Everything is deterministic given a seed: dataset synthesis, label
//! noise, annotation, augmentation, batching, and model initialization all
//! derive independent generators from (seed, role, index) so results are
//! reproducible byte-for-byte.
//!
//! Numeric code is generic over [`scalar::Scalar`] (implemented for `f32`
//! and `f64`); the crate root exports `f64` aliases for the common types.

pub mod annotate;
pub mod augment;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod generate;
pub mod io;
pub mod label;
pub mod loss;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use label::{OrdinalLabel, ReliabilityClass, Stage};
pub use scalar::Scalar;
pub use train::Regime;

/// Scalar type used by the convenience aliases below.
pub type DefaultScalar = f64;

pub type Signal = data::Signal<DefaultScalar>;
pub type Latent = data::Latent<DefaultScalar>;
pub type LabeledSample = data::LabeledSample<DefaultScalar>;
pub type Dataset = data::Dataset<DefaultScalar>;

pub type SoftLabel = label::SoftLabel<DefaultScalar>;
pub type Target = label::Target<DefaultScalar>;
pub type WeightConfig = label::WeightConfig<DefaultScalar>;
pub type ReliabilityRecord = label::ReliabilityRecord<DefaultScalar>;

pub type Logits = loss::Logits<DefaultScalar>;
pub type Probabilities = loss::Probabilities<DefaultScalar>;

pub type ChannelSpec = generate::ChannelSpec<DefaultScalar>;
pub type GeneratorConfig = generate::GeneratorConfig<DefaultScalar>;

pub type FeatureVector = features::FeatureVector<DefaultScalar>;
pub type ClassifierModel = model::ClassifierModel<DefaultScalar>;
pub type Checkpoint = model::Checkpoint<DefaultScalar>;

pub type TrainConfig = train::TrainConfig<DefaultScalar>;
pub type StageHistory = train::StageHistory<DefaultScalar>;
pub type TrainReport = train::TrainReport<DefaultScalar>;

pub type MetricBundle = eval::MetricBundle<DefaultScalar>;
pub type EvalReport = eval::EvalReport<DefaultScalar>;
