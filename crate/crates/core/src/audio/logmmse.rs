//! Log-spectral amplitude MMSE noise suppression (Ephraim & Malah, 1985).
//!
//! The noise power spectrum is estimated once from the leading frames and
//! held fixed. The a priori SNR follows the decision-directed rule and each
//! bin's gain is `ξ/(1+ξ) · exp(½·E1(v))` with `v = γ·ξ/(1+ξ)`, clamped to
//! `[gain_floor, 1]`.

use super::{AudioClip, EnhancementConfig};
use crate::dsp::{ms_to_samples, Stft};
use crate::error::{CoreError, Result};
use crate::special::expint_e1;

/// Lower bound on the a priori SNR (-25 dB).
const XI_MIN: f64 = 0.003_162_277_660_168_379_5;
/// Upper bound on the a posteriori SNR.
const GAMMA_MAX: f64 = 40.0;
const NOISE_FLOOR: f64 = 1e-20;

/// Per-frame, per-bin gains applied during enhancement.
#[derive(Debug, Clone, Default)]
pub struct GainTrace {
    pub frames: Vec<Vec<f64>>,
}

impl GainTrace {
    pub fn min(&self) -> f64 {
        self.frames.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.frames.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn lsa_gain(xi: f64, gamma: f64) -> f64 {
    let a = xi / (1.0 + xi);
    let v = a * gamma;
    if v < 1e-300 {
        return 1.0;
    }
    // exp(E1/2) overflows only for absurdly small v, which clamps to 1 anyway
    let g = a * (0.5 * expint_e1(v)).exp();
    if g.is_finite() {
        g
    } else {
        1.0
    }
}

pub fn logmmse_enhance(clip: &AudioClip, cfg: &EnhancementConfig) -> Result<AudioClip> {
    logmmse_enhance_impl(clip, cfg, false).map(|(c, _)| c)
}

/// Same as [`logmmse_enhance`] but also returns every gain that was applied.
pub fn logmmse_enhance_traced(clip: &AudioClip, cfg: &EnhancementConfig) -> Result<(AudioClip, GainTrace)> {
    logmmse_enhance_impl(clip, cfg, true)
}

fn logmmse_enhance_impl(clip: &AudioClip, cfg: &EnhancementConfig, trace: bool) -> Result<(AudioClip, GainTrace)> {
    cfg.validate()?;
    let mut frame_len = ms_to_samples(cfg.frame_ms, clip.sample_rate).max(4);
    frame_len += frame_len % 2;
    let hop = ((frame_len as f64) * (1.0 - cfg.overlap_fraction)).round().max(1.0) as usize;
    let needed = cfg.noise_frames * frame_len;
    if clip.len() < needed {
        return Err(CoreError::InsufficientAudio {
            needed,
            got: clip.len(),
        });
    }

    let stft = Stft::new(frame_len, hop)?;
    let leading = stft.leading_power(&clip.samples, cfg.noise_frames);
    let bins = frame_len / 2 + 1;
    let mut noise = vec![0.0; bins];
    for frame in &leading {
        for (n, p) in noise.iter_mut().zip(frame) {
            *n += p / cfg.noise_frames as f64;
        }
    }
    for n in noise.iter_mut() {
        *n = n.max(NOISE_FLOOR);
    }

    let alpha = cfg.ddir_alpha;
    let floor = cfg.gain_floor;
    // |gain · X|^2 of the previous frame
    let mut prev_clean: Option<Vec<f64>> = None;
    let mut gains_seen = GainTrace::default();

    let samples = stft.process(&clip.samples, |power, _| {
        let mut gains = Vec::with_capacity(bins);
        let mut clean = Vec::with_capacity(bins);
        for k in 0..bins {
            let gamma = (power[k] / noise[k]).min(GAMMA_MAX);
            let ml = (gamma - 1.0).max(0.0);
            let xi = match &prev_clean {
                None => alpha + (1.0 - alpha) * ml,
                Some(prev) => (alpha * prev[k] / noise[k] + (1.0 - alpha) * ml).max(XI_MIN),
            };
            let g = lsa_gain(xi, gamma).clamp(floor, 1.0);
            gains.push(g);
            clean.push(g * g * power[k]);
        }
        prev_clean = Some(clean);
        if trace {
            gains_seen.frames.push(gains.clone());
        }
        gains
    });

    Ok((clip.with_samples(samples), gains_seen))
}
