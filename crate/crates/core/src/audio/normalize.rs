use super::AudioClip;
use crate::error::{CoreError, Result};

/// A normalized clip plus whether peak limiting kicked in.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub clip: AudioClip,
    pub clipped: bool,
}

/// Scale `clip` so its RMS equals `10^(target_dbfs/20)`.
///
/// Samples pushed beyond full scale are limited to [-1, 1] and reported via
/// [`Normalized::clipped`]; the RMS target is then not met exactly.
pub fn normalize_dbfs(clip: &AudioClip, target_dbfs: f64) -> Result<Normalized> {
    let rms = clip.rms();
    if !(rms > 0.0) {
        return Err(CoreError::CannotNormalize);
    }
    let gain = 10f64.powf(target_dbfs / 20.0) / rms;
    let mut clipped = false;
    let samples = clip
        .samples
        .iter()
        .map(|s| {
            let y = s * gain;
            if y.abs() > 1.0 {
                clipped = true;
                y.clamp(-1.0, 1.0)
            } else {
                y
            }
        })
        .collect();
    Ok(Normalized {
        clip: clip.with_samples(samples),
        clipped,
    })
}
