//! Unsupervised wildfire anomaly detection.
//!
//! The crate covers the whole pipeline: ingesting daily region-level
//! weather and vegetation records ([`data`]), a small reverse-mode training
//! engine ([`nn`]), fully connected and LSTM autoencoders
//! ([`autoencoder`]), reconstruction-error thresholding ([`threshold`]),
//! detectors on latent features ([`cluster`]), random-forest feature
//! screening ([`importance`]) and evaluation/reporting ([`metrics`]).
//! [`pipeline`] wires these together behind a [`config::RunConfig`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod cluster;
pub mod config;
pub mod data;
mod error;
pub mod importance;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod svg;
pub mod threshold;

pub use error::{Error, Result};

pub use autoencoder::{Autoencoder, AutoencoderKind, AutoencoderSpec};
pub use data::{FeatureMatrix, FeatureSet, FeatureSetName, RecordTable, SequenceTensor};
pub use metrics::{ConfusionMatrix, MetricSet, RocCurve};
pub use threshold::Threshold;
