//! Conventional acoustic features and deep-feature ingestion.
//!
//! Frame-level low-level descriptors (LLDs) are collected as [`FrameTrack`]s
//! and reduced to scalars with statistical [`functionals`]; the scalar layout
//! is fixed by a versioned [`FeatureManifest`].

mod deep;
mod extract;
pub mod functionals;
mod manifest;
mod perturbation;
mod pitch;
mod spectral;
mod temporal;

use serde::{Deserialize, Serialize};

pub use deep::{
    aggregate_deep, deep_feature_names, ingest_deep_features, parse_deep_matrix, DeepFeatureMatrix, DEEP_HOP_MS,
    DEEP_MANIFEST_ID, DEEP_WINDOW_S,
};
pub use extract::{extract_conventional, Extracted};
pub use functionals::{functionals, FunctionalSet};
pub use manifest::{FeatureManifest, MANIFEST_V1_TEXT};
pub use perturbation::{jitter_shimmer, Perturbation};
pub use pitch::{f0_track, hnr_track, pitch_analysis, PitchFrame};
pub use spectral::{delta_track, mfcc_track, MelFilterbank};
pub use temporal::{intensity_track, pause_features, zcr_track, PauseFeatures};

/// One low-level descriptor sampled on an even frame grid.
/// `None` marks frames where the descriptor is undefined (e.g. unvoiced F0).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack {
    pub name: String,
    pub values: Vec<Option<f64>>,
    pub frame_len_ms: f64,
    pub frame_hop_ms: f64,
}

impl FrameTrack {
    pub fn dense(name: impl Into<String>, values: Vec<f64>, frame_len_ms: f64, frame_hop_ms: f64) -> Self {
        FrameTrack {
            name: name.into(),
            values: values.into_iter().map(Some).collect(),
            frame_len_ms,
            frame_hop_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// Fixed-length descriptor vector tagged with the manifest that laid it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub manifest_id: String,
    pub values: Vec<f64>,
}

/// Framing and threshold parameters for LLD extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub pitch_frame_ms: f64,
    pub pitch_hop_ms: f64,
    pub pre_emphasis: f64,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub log_floor: f64,
    pub delta_window: usize,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Minimum normalized autocorrelation peak for a frame to count as voiced.
    pub voicing_threshold: f64,
    pub silence_dbfs: f64,
    pub min_pause_ms: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_ms: 25.0,
            hop_ms: 10.0,
            pitch_frame_ms: 40.0,
            pitch_hop_ms: 10.0,
            pre_emphasis: 0.97,
            n_mels: 26,
            n_mfcc: 13,
            log_floor: 1e-10,
            delta_window: 2,
            f0_min_hz: 75.0,
            f0_max_hz: 500.0,
            voicing_threshold: 0.45,
            silence_dbfs: -40.0,
            min_pause_ms: 250.0,
        }
    }
}
