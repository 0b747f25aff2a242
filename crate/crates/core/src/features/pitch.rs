//! Autocorrelation pitch tracking and harmonics-to-noise ratio.
//!
//! Each frame is mean-removed and scored with the normalized
//! cross-correlation `r(τ) = Σ x_i x_{i+τ} / sqrt(Σ x_i² · Σ x_{i+τ}²)` over
//! lags covering `[f0_min, f0_max]`. The chosen lag is the first local maximum
//! reaching 90% of the best one, which keeps multiples of the period from
//! winning on near-ties. Parabolic interpolation refines lag and peak value.

use super::{FeatureConfig, FrameTrack};
use crate::audio::AudioClip;
use crate::dsp::{frames, FrameSpec, RealFft};
use crate::error::Result;

/// Near-ties with the best peak within this ratio go to the shorter lag.
const OCTAVE_TOLERANCE: f64 = 0.9;
const R_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    pub voiced: bool,
    pub f0_hz: f64,
    /// Interpolated normalized autocorrelation at the chosen lag.
    pub strength: f64,
}

const UNVOICED: PitchFrame = PitchFrame {
    voiced: false,
    f0_hz: 0.0,
    strength: 0.0,
};

fn parabolic(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return (0.0, b);
    }
    let p = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (p, b - 0.25 * (a - c) * p)
}

pub fn pitch_analysis(clip: &AudioClip, cfg: &FeatureConfig) -> Result<Vec<PitchFrame>> {
    let spec = FrameSpec::from_ms(cfg.pitch_frame_ms, cfg.pitch_hop_ms, clip.sample_rate)?;
    let sr = f64::from(clip.sample_rate);
    let len = spec.len;
    let lag_min = ((sr / cfg.f0_max_hz).floor() as usize).max(2);
    let lag_max = ((sr / cfg.f0_min_hz).ceil() as usize).min(len.saturating_sub(2));
    let mut fft = RealFft::new((2 * len).next_power_of_two());
    let mut buf = vec![0.0; len];
    let mut prefix = vec![0.0; len + 1];

    let frames = frames(&clip.samples, spec)?;
    Ok(frames
        .map(|frame| {
            if lag_min + 1 >= lag_max {
                return UNVOICED;
            }
            let mean = frame.iter().sum::<f64>() / len as f64;
            for (b, x) in buf.iter_mut().zip(frame) {
                *b = x - mean;
            }
            for i in 0..len {
                prefix[i + 1] = prefix[i] + buf[i] * buf[i];
            }
            let energy = prefix[len];
            if energy < 1e-20 {
                return UNVOICED;
            }
            let ac = fft.autocorrelation(&buf);
            let nccf = |lag: usize| {
                let head = prefix[len - lag];
                let tail = energy - prefix[lag];
                let d = (head * tail).sqrt();
                if d > 0.0 {
                    ac[lag] / d
                } else {
                    0.0
                }
            };
            let r: Vec<f64> = (lag_min - 1..=lag_max + 1).map(nccf).collect();
            // r[j] is lag lag_min - 1 + j
            let peaks: Vec<usize> = (1..r.len() - 1)
                .filter(|&j| r[j] > r[j - 1] && r[j] >= r[j + 1])
                .collect();
            let Some(best) = peaks.iter().map(|&j| r[j]).reduce(f64::max) else {
                return UNVOICED;
            };
            if best <= 0.0 {
                return UNVOICED;
            }
            let j = *peaks
                .iter()
                .find(|&&j| r[j] >= OCTAVE_TOLERANCE * best)
                .expect("best peak qualifies");
            let (shift, value) = parabolic(r[j - 1], r[j], r[j + 1]);
            let lag = (lag_min - 1 + j) as f64 + shift;
            if value < cfg.voicing_threshold {
                return PitchFrame {
                    voiced: false,
                    f0_hz: sr / lag,
                    strength: value,
                };
            }
            PitchFrame {
                voiced: true,
                f0_hz: sr / lag,
                strength: value.min(1.0),
            }
        })
        .collect())
}

/// F0 in Hz on voiced frames, absent elsewhere.
pub fn f0_track(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FrameTrack> {
    let frames = pitch_analysis(clip, cfg)?;
    Ok(f0_from_frames(&frames, cfg))
}

pub(crate) fn f0_from_frames(frames: &[PitchFrame], cfg: &FeatureConfig) -> FrameTrack {
    FrameTrack {
        name: "F0".into(),
        values: frames.iter().map(|f| f.voiced.then_some(f.f0_hz)).collect(),
        frame_len_ms: cfg.pitch_frame_ms,
        frame_hop_ms: cfg.pitch_hop_ms,
    }
}

/// `10·log10(r / (1 - r))` on voiced frames, with `r` clamped to `[1e-6, 1 - 1e-6]`.
pub fn hnr_track(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FrameTrack> {
    let frames = pitch_analysis(clip, cfg)?;
    Ok(hnr_from_frames(&frames, cfg))
}

pub(crate) fn hnr_from_frames(frames: &[PitchFrame], cfg: &FeatureConfig) -> FrameTrack {
    FrameTrack {
        name: "HNR".into(),
        values: frames
            .iter()
            .map(|f| {
                f.voiced.then(|| {
                    let r = f.strength.clamp(R_CLAMP, 1.0 - R_CLAMP);
                    10.0 * (r / (1.0 - r)).log10()
                })
            })
            .collect(),
        frame_len_ms: cfg.pitch_frame_ms,
        frame_hop_ms: cfg.pitch_hop_ms,
    }
}
