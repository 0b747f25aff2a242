//! Speech-based depression severity estimation with a cost-accounted
//! comparison between hand-crafted acoustic features and ingested deep
//! representation features.
//!
//! The pipeline runs loudness normalization and log-MMSE enhancement
//! ([`audio`]), extracts a versioned conventional feature vector
//! ([`features`]), standardizes and selects features with mRMR
//! ([`preprocess`]), fits SVR / random forest / feedforward regressors
//! ([`models`]) and scores them with subject-independent, severity-stratified
//! cross-validation ([`evaluation`]). [`pipeline`] wires the stages together
//! from a [`config::PipelineConfig`], and [`synth`] generates a synthetic
//! corpus for self-contained runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod config;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod special;
pub mod synth;

pub use audio::{AudioClip, EnhancementConfig};
pub use error::{CoreError, Result};
pub use evaluation::{EvaluationReport, SampleMeta};
pub use features::{FeatureManifest, FeatureVector};
pub use matrix::FeatureMatrix;
pub use models::{ModelFamily, RegressorModel};
