//! Vowel-like periodic test signals with controlled perturbation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative harmonic amplitudes of the cycle shape; cosine phases put the
/// cycle's dominant peak at phase 0.
const HARMONICS: [f64; 5] = [1.0, 0.6, 0.35, 0.2, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct VowelSpec {
    pub sample_rate: u32,
    pub f0_hz: f64,
    pub duration_s: f64,
    /// Peak amplitude of an unperturbed cycle.
    pub amplitude: f64,
    /// Each cycle's period is scaled by `1 + U(-p, p)`.
    pub period_jitter: f64,
    /// Each cycle's amplitude is scaled by `1 + U(-a, a)`.
    pub amplitude_jitter: f64,
    /// Odd cycles are scaled by `1 + s`.
    pub alternating_shimmer: f64,
}

impl VowelSpec {
    pub fn steady(sample_rate: u32, f0_hz: f64, duration_s: f64) -> Self {
        VowelSpec {
            sample_rate,
            f0_hz,
            duration_s,
            amplitude: 0.5,
            period_jitter: 0.0,
            amplitude_jitter: 0.0,
            alternating_shimmer: 0.0,
        }
    }
}

fn cycle_shape(phase: f64) -> f64 {
    let norm: f64 = HARMONICS.iter().sum();
    HARMONICS
        .iter()
        .enumerate()
        .map(|(h, a)| a * (2.0 * PI * (h + 1) as f64 * phase).cos())
        .sum::<f64>()
        / norm
}

/// Synthesize cycle by cycle. Within a cycle the phase advances linearly and
/// the amplitude moves linearly toward the next cycle's value, so the
/// waveform is continuous while every cycle keeps its own period and peak.
pub fn periodic_vowel(spec: &VowelSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(spec.sample_rate);
    let n = (spec.duration_s * sr).round() as usize;
    let base_period = sr / spec.f0_hz;

    let cycle_amp = |i: usize, rng: &mut ChaCha8Rng| {
        let mut a = spec.amplitude;
        if spec.amplitude_jitter > 0.0 {
            a *= 1.0 + rng.gen_range(-spec.amplitude_jitter..=spec.amplitude_jitter);
        }
        if i % 2 == 1 {
            a *= 1.0 + spec.alternating_shimmer;
        }
        a
    };
    let cycle_period = |rng: &mut ChaCha8Rng| {
        if spec.period_jitter > 0.0 {
            base_period * (1.0 + rng.gen_range(-spec.period_jitter..=spec.period_jitter))
        } else {
            base_period
        }
    };

    let mut out = Vec::with_capacity(n);
    let mut idx = 0usize;
    let mut start = 0.0;
    let mut period = cycle_period(&mut rng);
    let mut amp = cycle_amp(0, &mut rng);
    let mut next_amp = cycle_amp(1, &mut rng);
    for s in 0..n {
        let t = s as f64;
        while t >= start + period {
            start += period;
            idx += 1;
            period = cycle_period(&mut rng);
            amp = next_amp;
            next_amp = cycle_amp(idx + 1, &mut rng);
        }
        let phase = (t - start) / period;
        let env = amp + (next_amp - amp) * phase;
        out.push(env * cycle_shape(phase));
    }
    out
}
