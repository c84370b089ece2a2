//! Toolkit for cross-tokenizer knowledge distillation and pool-based active
//! learning on extractive question answering.
//!
//! The crate never runs a neural network. It consumes serialized model
//! outputs (tokenizations, start/end logits, ranked answer candidates,
//! question embeddings) and provides:
//!
//! * [`qa_data`]: SQuAD v1.1 loading and answer normalization,
//! * [`align`]: rule-based alignment of student and teacher tokenizations,
//! * [`resample`]: linear / natural cubic resampling of logit vectors,
//! * [`loss`]: the hard + tempered-soft (+ interpolation MSE) distillation loss,
//! * [`metrics`]: exact match and token F1,
//! * [`active`]: least confidence, margin, entropy and clustered selection,
//! * [`stats`]: paired bootstrap significance testing.

pub mod active;
pub mod align;
pub mod cli;
pub mod error;
pub mod formats;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod qa_data;
pub mod resample;
pub mod rng;
pub mod stats;

pub use error::{AlignmentError, Error, Result};

/// `FromStr` through the same names the CLI accepts.
macro_rules! from_value_name {
    ($($t:ty),* $(,)?) => {$(
        impl std::str::FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <Self as clap::ValueEnum>::from_str(s, false).map_err(Error::Argument)
            }
        }
    )*};
}

from_value_name!(
    resample::Method,
    loss::ResampleDirection,
    active::Strategy,
    active::MarginMode,
    active::ScheduleMode,
    formats::ScoreMetric,
);
