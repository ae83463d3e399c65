//! Mortality prediction from irregularly sampled ICU time-series.
//!
//! The pipeline turns PhysioNet-2012-style records into per-interval
//! feature matrices ([`preprocess`]), runs them through an LSTM or
//! bidirectional LSTM with soft attention reading heads ([`model`]), and
//! trains the whole network end to end with a small reverse-mode
//! differentiation engine ([`autodiff`]) and Adam ([`train`]).

pub mod autodiff;
pub mod gradcheck;
pub mod ingest;
pub mod model;
pub mod preprocess;
pub mod synthetic;
pub mod train;

pub use autodiff::{Tape, Tensor, Var};
pub use ingest::{parse_outcomes, parse_record, RawEpisode};
pub use model::{AttentionTrace, ModelConfig, ModelFile, ModelParams};
pub use preprocess::{EpisodeFeatures, FittedPreprocessor, FEATURE_DIM};
pub use train::{cross_validate, CvReport, TrainConfig, Variant};
