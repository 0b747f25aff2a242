//! MFCCs and regression deltas.

use std::f64::consts::PI;

use super::{FeatureConfig, FrameTrack};
use crate::audio::AudioClip;
use crate::dsp::{frames, FrameSpec, RealFft, Window};
use crate::error::{CoreError, Result};

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters spanning 0 Hz to Nyquist on an FFT bin grid.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `filters[j][k]` weight of power bin `k` in filter `j`
    pub filters: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, nfft: usize, sample_rate: u32) -> Self {
        let sr = f64::from(sample_rate);
        let top = hz_to_mel(sr / 2.0);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bins = nfft / 2 + 1;
        let filters = (0..n_mels)
            .map(|j| {
                let (lo, mid, hi) = (edges[j], edges[j + 1], edges[j + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * sr / nfft as f64;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();
        MelFilterbank { filters }
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.filters
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II, first `n_out` coefficients.
pub(crate) fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let m = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                .sum();
            let norm = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            s * norm
        })
        .collect()
}

/// MFCC 0..n_mfcc tracks: per frame pre-emphasis, Hann window, power
/// spectrum, mel filterbank, floored log, DCT-II.
pub fn mfcc_track(clip: &AudioClip, cfg: &FeatureConfig) -> Result<Vec<FrameTrack>> {
    let spec = FrameSpec::from_ms(cfg.frame_ms, cfg.hop_ms, clip.sample_rate)?;
    let nfft = spec.len.next_power_of_two();
    let bank = MelFilterbank::new(cfg.n_mels, nfft, clip.sample_rate);
    let window = Window::Hann.coefficients(spec.len);
    let mut fft = RealFft::new(nfft);
    let mut buf = vec![0.0; spec.len];
    let mut coeffs: Vec<Vec<f64>> = vec![Vec::new(); cfg.n_mfcc];

    for frame in frames(&clip.samples, spec)? {
        buf[0] = frame[0] * window[0];
        for i in 1..spec.len {
            buf[i] = (frame[i] - cfg.pre_emphasis * frame[i - 1]) * window[i];
        }
        let power = fft.power(&buf);
        let log_mel: Vec<f64> = bank
            .apply(&power)
            .into_iter()
            .map(|e| e.max(cfg.log_floor).ln())
            .collect();
        for (track, c) in coeffs.iter_mut().zip(dct2(&log_mel, cfg.n_mfcc)) {
            track.push(c);
        }
    }

    Ok(coeffs
        .into_iter()
        .enumerate()
        .map(|(i, v)| FrameTrack::dense(format!("mfcc{i}"), v, cfg.frame_ms, cfg.hop_ms))
        .collect())
}

/// Regression delta over `±window` frames with edge replication; order 2 is
/// the delta of the delta. Absent values are treated as missing and
/// propagate to every output frame that touches them.
pub fn delta_track(track: &FrameTrack, order: u8, window: usize) -> Result<FrameTrack> {
    if !(1..=2).contains(&order) {
        return Err(CoreError::Config(format!("delta order {order} not in {{1, 2}}")));
    }
    let needed = 2 * window + 1;
    if track.len() < needed {
        return Err(CoreError::InsufficientFrames {
            needed,
            got: track.len(),
        });
    }
    let mut cur = track.clone();
    for _ in 0..order {
        cur = delta_once(&cur, window);
    }
    let suffix = if order == 1 { "d1" } else { "d2" };
    cur.name = format!("{}_{suffix}", track.name);
    Ok(cur)
}

fn delta_once(track: &FrameTrack, window: usize) -> FrameTrack {
    let n = track.len() as isize;
    let denom: f64 = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
    let at = |i: isize| track.values[i.clamp(0, n - 1) as usize];
    let values = (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for k in 1..=window as isize {
                acc += k as f64 * (at(t + k)? - at(t - k)?);
            }
            Some(acc / denom)
        })
        .collect();
    FrameTrack {
        name: track.name.clone(),
        values,
        frame_len_ms: track.frame_len_ms,
        frame_hop_ms: track.frame_hop_ms,
    }
}
