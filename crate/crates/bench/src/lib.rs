//! Deterministic inputs shared by the stage benchmarks.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use speechcost_core::synth::voice::{periodic_vowel, VowelSpec};
use speechcost_core::AudioClip;

pub const SAMPLE_RATE: u32 = 16000;

/// A mildly perturbed 150 Hz vowel with low-level noise.
pub fn vowel_clip(duration_s: f64, seed: u64) -> AudioClip {
    let spec = VowelSpec {
        sample_rate: SAMPLE_RATE,
        f0_hz: 150.0,
        duration_s,
        amplitude: 0.3,
        period_jitter: 0.01,
        amplitude_jitter: 0.02,
        alternating_shimmer: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = periodic_vowel(&spec, seed)
        .into_iter()
        .map(|v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            v + 0.01 * n
        })
        .collect();
    AudioClip::new("bench", SAMPLE_RATE, samples).expect("valid clip")
}

/// `y = X·w + noise` with standard normal design and weights `1..=p`.
pub fn linear_task(n: usize, p: usize, noise_sd: f64, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    let y = x
        .rows()
        .into_iter()
        .map(|r| {
            let e: f64 = StandardNormal.sample(&mut rng);
            r.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v).sum::<f64>() + noise_sd * e
        })
        .collect();
    (x, y)
}

/// Feature names `f0, f1, ...`.
pub fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

/// A `windows × dim` deep activation matrix with sparse nonnegative entries.
pub fn deep_rows(windows: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..windows)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v.max(0.0)
                })
                .collect()
        })
        .collect()
}
