//! Audio ingestion, loudness normalization and log-MMSE enhancement.

mod logmmse;
mod normalize;
mod wav;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub use logmmse::{logmmse_enhance, logmmse_enhance_traced, GainTrace};
pub use normalize::{normalize_dbfs, Normalized};
pub use wav::{decode_wav, encode_wav_pcm16, load_wav, write_wav};

/// Mono PCM signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub id: String,
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioClip {
    pub fn new(id: impl Into<String>, sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(CoreError::Data("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(CoreError::EmptyInput("audio clip has no samples".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(CoreError::Data("audio clip contains non-finite samples".into()));
        }
        Ok(AudioClip {
            id: id.into(),
            sample_rate,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn rms(&self) -> f64 {
        crate::dsp::rms(&self.samples)
    }

    pub fn with_samples(&self, samples: Vec<f64>) -> AudioClip {
        AudioClip {
            id: self.id.clone(),
            sample_rate: self.sample_rate,
            samples,
        }
    }
}

/// Parameters of the log-MMSE estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhancementConfig {
    pub frame_ms: f64,
    pub overlap_fraction: f64,
    /// Leading frames averaged into the noise power estimate.
    pub noise_frames: usize,
    /// Decision-directed a priori SNR smoothing weight.
    pub ddir_alpha: f64,
    pub gain_floor: f64,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        EnhancementConfig {
            frame_ms: 32.0,
            overlap_fraction: 0.5,
            noise_frames: 6,
            ddir_alpha: 0.98,
            gain_floor: 0.1,
        }
    }
}

impl EnhancementConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CoreError::Config(format!("enhancement: {what}")));
        if !(self.frame_ms > 0.0) {
            return bad("frame_ms must be positive");
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction < 1.0) {
            return bad("overlap_fraction must lie in (0, 1)");
        }
        if self.noise_frames < 1 {
            return bad("noise_frames must be at least 1");
        }
        if !(self.ddir_alpha > 0.0 && self.ddir_alpha < 1.0) {
            return bad("ddir_alpha must lie in (0, 1)");
        }
        if !(self.gain_floor > 0.0 && self.gain_floor < 1.0) {
            return bad("gain_floor must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Order of the two conditioning steps applied before feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningOrder {
    #[default]
    NormalizeFirst,
    EnhanceFirst,
}

/// Normalization and optional enhancement, in the configured order.
pub fn condition(
    clip: &AudioClip,
    target_dbfs: f64,
    enhancement: Option<&EnhancementConfig>,
    order: ConditioningOrder,
) -> Result<AudioClip> {
    match (enhancement, order) {
        (None, _) => Ok(normalize_dbfs(clip, target_dbfs)?.clip),
        (Some(cfg), ConditioningOrder::NormalizeFirst) => {
            let n = normalize_dbfs(clip, target_dbfs)?.clip;
            logmmse_enhance(&n, cfg)
        }
        (Some(cfg), ConditioningOrder::EnhanceFirst) => {
            let e = logmmse_enhance(clip, cfg)?;
            Ok(normalize_dbfs(&e, target_dbfs)?.clip)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_validation() {
        assert!(AudioClip::new("a", 0, vec![0.1]).is_err());
        assert!(matches!(
            AudioClip::new("a", 16000, vec![]),
            Err(CoreError::EmptyInput(_))
        ));
        assert!(AudioClip::new("a", 16000, vec![f64::NAN]).is_err());
        let c = AudioClip::new("a", 16000, vec![0.0; 8000]).unwrap();
        assert!((c.duration_s() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_enhancement_config_is_valid() {
        EnhancementConfig::default().validate().unwrap();
        let bad = EnhancementConfig {
            overlap_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EnhancementConfig {
            gain_floor: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
