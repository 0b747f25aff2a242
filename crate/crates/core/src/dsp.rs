//! Framing, windows and a short-time Fourier analysis/synthesis loop.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Symmetric window of length `len` (Hann endpoints are exactly zero).
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => {
                if len == 1 {
                    return vec![1.0];
                }
                let denom = (len - 1) as f64;
                (0..len)
                    .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / denom).cos())
                    .collect()
            }
        }
    }
}

/// Periodic Hann window; shifted copies at hop `len/2` sum to exactly one.
pub fn periodic_hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * f64::from(sample_rate) / 1000.0).round() as usize
}

/// Frame geometry in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub len: usize,
    pub hop: usize,
}

impl FrameSpec {
    pub fn from_ms(frame_ms: f64, hop_ms: f64, sample_rate: u32) -> Result<Self> {
        if !(hop_ms > 0.0) || frame_ms < hop_ms {
            return Err(CoreError::Config(format!(
                "frame {frame_ms} ms / hop {hop_ms} ms: need frame >= hop > 0"
            )));
        }
        let len = ms_to_samples(frame_ms, sample_rate).max(1);
        let hop = ms_to_samples(hop_ms, sample_rate).max(1);
        Ok(FrameSpec { len, hop })
    }

    /// `floor((N - L) / H) + 1`, or an error when the signal is shorter than one frame.
    pub fn count(&self, n: usize) -> Result<usize> {
        if n < self.len {
            return Err(CoreError::InsufficientAudio {
                needed: self.len,
                got: n,
            });
        }
        Ok((n - self.len) / self.hop + 1)
    }
}

/// Split `samples` into windowed frames.
pub fn frame_signal(samples: &[f64], spec: FrameSpec, window: Window) -> Result<Vec<Vec<f64>>> {
    let count = spec.count(samples.len())?;
    let w = window.coefficients(spec.len);
    Ok((0..count)
        .map(|i| {
            let start = i * spec.hop;
            samples[start..start + spec.len]
                .iter()
                .zip(&w)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect())
}

/// Borrowed, unwindowed frames.
pub fn frames(samples: &[f64], spec: FrameSpec) -> Result<impl Iterator<Item = &[f64]>> {
    let count = spec.count(samples.len())?;
    Ok((0..count).map(move |i| &samples[i * spec.hop..i * spec.hop + spec.len]))
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Real-input FFT helper that caches its plan.
pub struct RealFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        RealFft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            buf: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Full complex spectrum of `x`, zero-padded to the transform length.
    pub fn spectrum(&mut self, x: &[f64]) -> &mut [Complex64] {
        for (i, slot) in self.buf.iter_mut().enumerate() {
            *slot = Complex64::new(x.get(i).copied().unwrap_or(0.0), 0.0);
        }
        self.forward.process(&mut self.buf);
        &mut self.buf
    }

    /// Power spectrum `|X_k|^2` for `k = 0..=n/2`.
    pub fn power(&mut self, x: &[f64]) -> Vec<f64> {
        let half = self.n / 2;
        let spec = self.spectrum(x);
        spec[..=half].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Inverse of the current buffer, real part, scaled by `1/n`.
    pub fn inverse_in_place(&mut self) -> Vec<f64> {
        self.inverse.process(&mut self.buf);
        let scale = 1.0 / self.n as f64;
        self.buf.iter().map(|c| c.re * scale).collect()
    }

    /// Linear autocorrelation `Σ_i x_i x_{i+τ}` for `τ = 0..x.len()`.
    /// Requires a transform length of at least `2 * x.len()`.
    pub fn autocorrelation(&mut self, x: &[f64]) -> Vec<f64> {
        debug_assert!(self.n >= 2 * x.len());
        self.spectrum(x);
        for c in self.buf.iter_mut() {
            *c = Complex64::new(c.norm_sqr(), 0.0);
        }
        let mut r = self.inverse_in_place();
        r.truncate(x.len());
        r
    }
}

/// Short-time Fourier analysis/synthesis with a periodic Hann analysis window.
///
/// The signal is padded by one frame on each side; the output is the
/// window-sum normalized overlap-add, so unit gains reproduce the input.
pub struct Stft {
    pub frame_len: usize,
    pub hop: usize,
    window: Vec<f64>,
}

impl Stft {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if frame_len < 2 || hop == 0 || hop > frame_len {
            return Err(CoreError::Config(format!(
                "invalid STFT geometry: frame {frame_len}, hop {hop}"
            )));
        }
        Ok(Stft {
            frame_len,
            hop,
            window: periodic_hann(frame_len),
        })
    }

    /// Power spectra (bins `0..=L/2`) of the first `count` frames taken from
    /// the unpadded signal start.
    pub fn leading_power(&self, samples: &[f64], count: usize) -> Vec<Vec<f64>> {
        let mut fft = RealFft::new(self.frame_len);
        let mut buf = vec![0.0; self.frame_len];
        (0..count)
            .map(|i| {
                let start = i * self.hop;
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = samples.get(start + k).copied().unwrap_or(0.0) * self.window[k];
                }
                fft.power(&buf)
            })
            .collect()
    }

    /// Run `gain_fn(power, frame_index) -> gains` over every frame, apply the
    /// real gains to the half spectrum (mirrored), and resynthesize.
    pub fn process<F>(&self, samples: &[f64], mut gain_fn: F) -> Vec<f64>
    where
        F: FnMut(&[f64], usize) -> Vec<f64>,
    {
        let n = samples.len();
        let l = self.frame_len;
        let half = l / 2;
        let mut padded = vec![0.0; n + 2 * l];
        padded[l..l + n].copy_from_slice(samples);
        let count = (padded.len() - l) / self.hop + 1;

        let mut out = vec![0.0; padded.len()];
        let mut wsum = vec![0.0; padded.len()];
        let mut fft = RealFft::new(l);
        let mut frame = vec![0.0; l];

        for idx in 0..count {
            let start = idx * self.hop;
            for k in 0..l {
                frame[k] = padded[start + k] * self.window[k];
            }
            let spec = fft.spectrum(&frame);
            let power: Vec<f64> = spec[..=half].iter().map(|c| c.norm_sqr()).collect();
            let gains = gain_fn(&power, idx);
            debug_assert_eq!(gains.len(), half + 1);
            for (k, g) in gains.iter().enumerate() {
                spec[k] *= *g;
                if k != 0 && k != half {
                    spec[l - k] *= *g;
                }
            }
            let frame_out = fft.inverse_in_place();
            for k in 0..l {
                out[start + k] += frame_out[k];
                wsum[start + k] += self.window[k];
            }
        }

        out[l..l + n]
            .iter()
            .zip(&wsum[l..l + n])
            .map(|(y, w)| if *w > 1e-8 { y / w } else { 0.0 })
            .collect()
    }
}
