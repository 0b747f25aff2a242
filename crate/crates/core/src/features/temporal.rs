//! Zero-crossing rate, intensity and pause structure.

use super::{FeatureConfig, FrameTrack};
use crate::audio::AudioClip;
use crate::dsp::{frames, rms, FrameSpec};
use crate::error::Result;

/// Intensity floor: -100 dB re full scale.
const MEAN_SQUARE_FLOOR: f64 = 1e-10;

/// Sign changes per sample in each rectangular frame.
pub fn zcr_track(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FrameTrack> {
    let spec = FrameSpec::from_ms(cfg.frame_ms, cfg.hop_ms, clip.sample_rate)?;
    let values = frames(&clip.samples, spec)?
        .map(|f| {
            let crossings = f.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
            crossings as f64 / f.len() as f64
        })
        .collect();
    Ok(FrameTrack::dense("zcr", values, cfg.frame_ms, cfg.hop_ms))
}

/// Frame RMS in dB relative to full scale.
pub fn intensity_track(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FrameTrack> {
    let spec = FrameSpec::from_ms(cfg.frame_ms, cfg.hop_ms, clip.sample_rate)?;
    let values = frames(&clip.samples, spec)?
        .map(|f| {
            let ms = f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
            10.0 * ms.max(MEAN_SQUARE_FLOOR).log10()
        })
        .collect();
    Ok(FrameTrack::dense("intensity", values, cfg.frame_ms, cfg.hop_ms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauseFeatures {
    pub total_dur_s: f64,
    pub speech_dur_s: f64,
    pub pause_count: usize,
    /// 0 when there are no pauses.
    pub mean_pause_s: f64,
    /// pauses per second
    pub pause_rate: f64,
    /// speech_dur / total_dur
    pub phonation_rate: f64,
}

/// Pause structure from block RMS against a fixed dBFS threshold.
///
/// The clip is cut into non-overlapping hop-length blocks (the last one may be
/// shorter); a block is speech when its RMS reaches the threshold. Pauses are
/// interior silent runs of at least `min_pause_ms`; leading and trailing
/// silence is neither speech nor pause.
pub fn pause_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<PauseFeatures> {
    let sr = f64::from(clip.sample_rate);
    let total = clip.len() as f64 / sr;
    let spec = FrameSpec::from_ms(cfg.frame_ms, cfg.hop_ms, clip.sample_rate)?;
    let threshold = 10f64.powf(cfg.silence_dbfs / 20.0);

    // (is_speech, length in samples)
    let blocks: Vec<(bool, usize)> = clip
        .samples
        .chunks(spec.hop)
        .map(|b| (rms(b) >= threshold, b.len()))
        .collect();
    let speech_samples: usize = blocks.iter().filter(|b| b.0).map(|b| b.1).sum();

    let min_pause = (cfg.min_pause_ms / 1000.0 * sr).round() as usize;
    let mut pauses = Vec::new();
    if let (Some(first), Some(last)) = (blocks.iter().position(|b| b.0), blocks.iter().rposition(|b| b.0)) {
        let mut run = 0usize;
        for &(loud, len) in &blocks[first..=last] {
            if loud {
                if run >= min_pause {
                    pauses.push(run);
                }
                run = 0;
            } else {
                run += len;
            }
        }
    }

    let speech_dur = speech_samples as f64 / sr;
    let mean_pause = if pauses.is_empty() {
        0.0
    } else {
        pauses.iter().sum::<usize>() as f64 / pauses.len() as f64 / sr
    };
    Ok(PauseFeatures {
        total_dur_s: total,
        speech_dur_s: speech_dur,
        pause_count: pauses.len(),
        mean_pause_s: mean_pause,
        pause_rate: pauses.len() as f64 / total,
        phonation_rate: (speech_dur / total).clamp(0.0, 1.0),
    })
}
