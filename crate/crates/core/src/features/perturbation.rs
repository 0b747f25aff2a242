//! Cycle-to-cycle period (jitter) and amplitude (shimmer) perturbation.

use super::FrameTrack;
use crate::audio::AudioClip;

/// Search window around the expected next cycle, as fractions of the period.
const SEARCH_LO: f64 = 0.7;
const SEARCH_HI: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// `mean|T_i - T_{i+1}| / mean T_i`
    pub jitter_local: f64,
    /// `mean|A_i - A_{i+1}| / mean A_i`
    pub shimmer_local: f64,
    /// `mean|T_i - T_{i+1}|` in seconds
    pub jitter_abs: f64,
    pub periods: usize,
}

fn refine_peak(x: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (i as f64, x[i]);
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return (i as f64, b);
    }
    let p = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (i as f64 + p, b - 0.25 * (a - c) * p)
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}

/// Locate one waveform peak per cycle inside each voiced run of `f0` and
/// measure period and amplitude perturbation between consecutive cycles.
/// Returns `None` when fewer than 3 periods are found.
pub fn jitter_shimmer(clip: &AudioClip, f0: &FrameTrack) -> Option<Perturbation> {
    let sr = f64::from(clip.sample_rate);
    let x = &clip.samples;
    let hop = (f0.frame_hop_ms * sr / 1000.0).round() as usize;
    let len = (f0.frame_len_ms * sr / 1000.0).round() as usize;
    if hop == 0 || len == 0 {
        return None;
    }

    // voiced runs as (first frame, last frame)
    let mut runs = Vec::new();
    let mut start = None;
    for (i, v) in f0.values.iter().enumerate() {
        match (v.is_some(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, f0.values.len() - 1));
    }

    let period_at = |pos: f64, first: usize, last: usize| -> f64 {
        let frame = ((pos - len as f64 / 2.0) / hop as f64)
            .round()
            .clamp(first as f64, last as f64) as usize;
        sr / f0.values[frame].expect("voiced run")
    };

    let mut diff_t = 0.0;
    let mut diff_a = 0.0;
    let mut pairs = 0usize;
    let mut sum_t = 0.0;
    let mut sum_a = 0.0;
    let mut periods = 0usize;

    for (first, last) in runs {
        let region_lo = first * hop;
        let region_hi = (last * hop + len).min(x.len());
        let t0 = period_at(region_lo as f64 + len as f64 / 2.0, first, last);
        let first_hi = (region_lo + t0.ceil() as usize).min(region_hi);
        if first_hi <= region_lo + 1 {
            continue;
        }
        let mut peaks = vec![refine_peak(x, argmax(x, region_lo, first_hi))];
        loop {
            let (pos, _) = *peaks.last().unwrap();
            let t = period_at(pos, first, last);
            let lo = (pos + SEARCH_LO * t).ceil() as usize;
            let hi = (pos + SEARCH_HI * t).floor() as usize + 1;
            if hi > region_hi || lo >= hi {
                break;
            }
            peaks.push(refine_peak(x, argmax(x, lo, hi)));
        }
        let cyc: Vec<(f64, f64)> = peaks.windows(2).map(|w| (w[1].0 - w[0].0, w[0].1)).collect();
        for c in &cyc {
            sum_t += c.0;
            sum_a += c.1;
        }
        periods += cyc.len();
        for w in cyc.windows(2) {
            diff_t += (w[0].0 - w[1].0).abs();
            diff_a += (w[0].1 - w[1].1).abs();
            pairs += 1;
        }
    }

    if periods < 3 || pairs == 0 || sum_t <= 0.0 || sum_a <= 0.0 {
        return None;
    }
    let mean_t = sum_t / periods as f64;
    let mean_a = sum_a / periods as f64;
    let mean_dt = diff_t / pairs as f64;
    Some(Perturbation {
        jitter_local: mean_dt / mean_t,
        shimmer_local: (diff_a / pairs as f64) / mean_a,
        jitter_abs: mean_dt / sr,
        periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{f0_track, FeatureConfig};
    use crate::synth::voice::{periodic_vowel, VowelSpec};

    #[test]
    fn periodic_vowel_has_negligible_perturbation() {
        let x = periodic_vowel(&VowelSpec::steady(16000, 150.0, 1.0), 0);
        let clip = AudioClip::new("v", 16000, x).unwrap();
        let f0 = f0_track(&clip, &FeatureConfig::default()).unwrap();
        let p = jitter_shimmer(&clip, &f0).unwrap();
        assert!(p.jitter_local < 0.002, "{p:?}");
        assert!(p.shimmer_local < 0.002, "{p:?}");
    }

    #[test]
    fn too_few_periods_is_undefined() {
        let clip = AudioClip::new("z", 16000, vec![0.0; 4000]).unwrap();
        let f0 = f0_track(&clip, &FeatureConfig::default()).unwrap();
        assert!(jitter_shimmer(&clip, &f0).is_none());
    }
}
