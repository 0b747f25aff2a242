mod common;

use std::f64::consts::PI;

use rand::Rng;
use speechcost_core::features::{
    aggregate_deep, extract_conventional, f0_track, jitter_shimmer, mfcc_track, pause_features, zcr_track,
    DeepFeatureMatrix, FeatureConfig,
};
use speechcost_core::synth::voice::{periodic_vowel, VowelSpec};
use speechcost_core::{AudioClip, FeatureManifest};

const SR: u32 = 16000;

fn clip(x: Vec<f64>) -> AudioClip {
    AudioClip::new("t", SR, x).unwrap()
}

fn vowel(f0: f64, period_jitter: f64, shimmer: f64, seed: u64) -> AudioClip {
    let spec = VowelSpec {
        sample_rate: SR,
        f0_hz: f0,
        duration_s: 2.0,
        amplitude: 0.3,
        period_jitter,
        amplitude_jitter: 0.0,
        alternating_shimmer: shimmer,
    };
    clip(periodic_vowel(&spec, seed))
}

/// MFCCs straight from the definitions: naive DFT, HTK mel triangles,
/// natural log, orthonormal DCT-II.
fn reference_mfcc(x: &[f64], cfg: &FeatureConfig) -> Vec<Vec<f64>> {
    let sr = f64::from(SR);
    let len = (cfg.frame_ms / 1000.0 * sr).round() as usize;
    let hop = (cfg.hop_ms / 1000.0 * sr).round() as usize;
    let mut nfft = 1;
    while nfft < len {
        nfft *= 2;
    }
    let bins = nfft / 2 + 1;
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| inv(mel(sr / 2.0) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= x.len() {
        let f = &x[start..start + len];
        let frame: Vec<f64> = (0..len)
            .map(|i| {
                let pre = if i == 0 {
                    f[0]
                } else {
                    f[i] - cfg.pre_emphasis * f[i - 1]
                };
                pre * (0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
            })
            .collect();
        let power: Vec<f64> = (0..bins)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / nfft as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                re * re + im * im
            })
            .collect();
        let log_mel: Vec<f64> = (0..cfg.n_mels)
            .map(|j| {
                let (lo, mid, hi) = (edges[j], edges[j + 1], edges[j + 2]);
                let e: f64 = (0..bins)
                    .map(|k| {
                        let fk = k as f64 * sr / nfft as f64;
                        let w = if fk <= lo || fk >= hi {
                            0.0
                        } else if fk <= mid {
                            (fk - lo) / (mid - lo)
                        } else {
                            (hi - fk) / (hi - mid)
                        };
                        w * power[k]
                    })
                    .sum();
                e.max(cfg.log_floor).ln()
            })
            .collect();
        let m = cfg.n_mels as f64;
        out.push(
            (0..cfg.n_mfcc)
                .map(|k| {
                    let s: f64 = log_mel
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                        .sum();
                    s * if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() }
                })
                .collect(),
        );
        start += hop;
    }
    out
}

fn mfcc_means(c: &AudioClip, cfg: &FeatureConfig) -> Vec<f64> {
    mfcc_track(c, cfg)
        .unwrap()
        .iter()
        .map(|t| common::mean(&t.present().collect::<Vec<_>>()))
        .collect()
}

#[test]
fn mfcc_matches_a_naive_dft_reference() {
    let cfg = FeatureConfig::default();
    let mut x = common::white_noise(4000, 0.05, 3);
    for (v, s) in x.iter_mut().zip(common::sine(4000, 300.0, 0.2, 16000.0)) {
        *v += s;
    }
    let tracks = mfcc_track(&clip(x.clone()), &cfg).unwrap();
    let reference = reference_mfcc(&x, &cfg);
    assert_eq!(tracks.len(), cfg.n_mfcc);
    assert_eq!(tracks[0].len(), reference.len());
    for (t, frame) in reference.iter().enumerate() {
        for (k, want) in frame.iter().enumerate() {
            let got = tracks[k].values[t].unwrap();
            assert!(
                (got - want).abs() < 1e-8 * want.abs().max(1.0),
                "frame {t} c{k}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn noise_and_tone_differ_in_mfcc1() {
    let cfg = FeatureConfig::default();
    let noise = clip(common::white_noise(16000, 0.1, 4));
    let tone = clip(common::sine(16000, 300.0, 0.14, 16000.0));
    let (a, b) = (mfcc_means(&noise, &cfg), mfcc_means(&tone, &cfg));
    assert!((a[1] - b[1]).abs() > 0.5, "{} vs {}", a[1], b[1]);
}

#[test]
fn shifting_a_frame_periodic_signal_by_one_hop_keeps_mfcc_means() {
    // harmonics of 100 Hz repeat every 160 samples, exactly one hop
    let cfg = FeatureConfig::default();
    let x: Vec<f64> = (0..20000)
        .map(|i| {
            let t = i as f64 / 16000.0;
            0.2 * (2.0 * PI * 100.0 * t).sin()
                + 0.1 * (2.0 * PI * 300.0 * t).sin()
                + 0.05 * (2.0 * PI * 1200.0 * t).cos()
        })
        .collect();
    let a = mfcc_means(&clip(x[..19000].to_vec()), &cfg);
    let b = mfcc_means(&clip(x[160..19160].to_vec()), &cfg);
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-3);
    }
}

#[test]
fn vowel_f0_mean_entry_is_within_a_hertz() {
    let manifest = FeatureManifest::v1();
    let out = extract_conventional(&vowel(220.0, 0.0, 0.0, 1), &manifest, &FeatureConfig::default()).unwrap();
    let i = manifest.entries.iter().position(|e| e == "F0_mean").unwrap();
    let f0 = out.vector.values[i];
    assert!((219.0..=221.0).contains(&f0), "{f0}");
    assert!(!out.flags.contains(&"F0_mean".to_string()));
}

#[test]
fn every_voiced_frame_of_a_sine_is_within_a_hertz() {
    let t = f0_track(
        &clip(common::sine(16000, 220.0, 0.3, 16000.0)),
        &FeatureConfig::default(),
    )
    .unwrap();
    assert!(t.present_count() > 90);
    assert!(t.present().all(|f| (219.0..=221.0).contains(&f)));
}

#[test]
fn perturbation_oracles() {
    let cfg = FeatureConfig::default();
    let measure = |c: &AudioClip| {
        let f0 = f0_track(c, &cfg).unwrap();
        jitter_shimmer(c, &f0).unwrap()
    };

    let periodic = measure(&vowel(150.0, 0.0, 0.0, 1));
    assert!(periodic.jitter_local < 0.002, "{periodic:?}");
    assert!(periodic.shimmer_local < 0.002, "{periodic:?}");

    // uniform ±2% periods: E|T_i − T_{i−1}| / T = 2·0.02/3 ≈ 0.0133
    for seed in [1, 2, 3] {
        let jittered = measure(&vowel(150.0, 0.02, 0.0, seed));
        assert!((0.01..=0.03).contains(&jittered.jitter_local), "{jittered:?}");
    }

    // amplitudes alternate 1 and 1.05: |ΔA| / mean A = 0.05 / 1.025
    let shimmered = measure(&vowel(150.0, 0.0, 0.05, 1));
    let expected = 0.05 / 1.025;
    assert!(
        (shimmered.shimmer_local - expected).abs() <= 0.3 * expected,
        "{shimmered:?}"
    );
}

#[test]
fn deep_aggregation_matches_columnwise_statistics() {
    let mut rng = common::rng(13);
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..4096).map(|_| rng.gen_range(-2.0..5.0)).collect())
        .collect();
    let m = DeepFeatureMatrix {
        sample_id: "d".into(),
        rows: rows.clone(),
        window_s: 1.0,
        hop_ms: 300.0,
    };
    let v = aggregate_deep(&m).values;
    assert_eq!(v.len(), 8192);
    for j in 0..4096 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        assert!((v[j] - common::mean(&col)).abs() < 1e-9);
        assert!((v[4096 + j] - common::pop_var(&col).sqrt()).abs() < 1e-9);
    }
}

/// Vowel bursts separated by gaps holding a faint noise bed, so no frame
/// sits on the intensity floor.
fn bursts(amp: f64, seed: u64) -> AudioClip {
    let bed = |n: usize, s: u64| common::white_noise(n, 1e-4 * amp, s);
    let spec = VowelSpec {
        sample_rate: SR,
        f0_hz: 180.0,
        duration_s: 0.8,
        amplitude: amp,
        period_jitter: 0.01,
        amplitude_jitter: 0.02,
        alternating_shimmer: 0.0,
    };
    let mut x = periodic_vowel(&spec, seed);
    x.extend(bed(6400, seed + 10));
    x.extend(periodic_vowel(&spec, seed + 1));
    x.extend(bed(9600, seed + 11));
    x.extend(periodic_vowel(&spec, seed + 2));
    clip(x)
}

fn value(names: &[String], v: &[f64], name: &str) -> f64 {
    v[names.iter().position(|e| e == name).unwrap()]
}

#[test]
fn doubling_the_amplitude_only_moves_intensity() {
    let manifest = FeatureManifest::v1();
    let cfg = FeatureConfig::default();
    let a = bursts(0.1, 5);
    let b = a.with_samples(a.samples.iter().map(|v| 2.0 * v).collect());
    let fa = extract_conventional(&a, &manifest, &cfg).unwrap().vector.values;
    let fb = extract_conventional(&b, &manifest, &cfg).unwrap().vector.values;
    let n = &manifest.entries;
    for key in [
        "F0_mean",
        "F0_min",
        "F0_max",
        "zcr_mean",
        "zcr_var",
        "jitter_local",
        "phonation_rate",
        "pause_count",
    ] {
        let (x, y) = (value(n, &fa, key), value(n, &fb, key));
        assert!((x - y).abs() < 1e-6, "{key}: {x} vs {y}");
    }
    let gain = value(n, &fb, "intensity_mean") - value(n, &fa, "intensity_mean");
    assert!((gain - 20.0 * 2f64.log10()).abs() < 0.1, "{gain}");
}

#[test]
fn time_reversal_keeps_zcr_and_pause_totals() {
    let cfg = FeatureConfig::default();
    let a = bursts(0.2, 8);
    let mut rev = a.samples.clone();
    rev.reverse();
    let b = a.with_samples(rev);
    let hop_s = cfg.hop_ms / 1000.0;

    let za: Vec<f64> = zcr_track(&a, &cfg).unwrap().present().collect();
    let zb: Vec<f64> = zcr_track(&b, &cfg).unwrap().present().collect();
    // one crossing in one frame of slack
    let frame_len = cfg.frame_ms / 1000.0 * f64::from(SR);
    assert_eq!(za.len(), zb.len());
    assert!((common::mean(&za) - common::mean(&zb)).abs() <= 1.0 / frame_len);

    let (pa, pb) = (pause_features(&a, &cfg).unwrap(), pause_features(&b, &cfg).unwrap());
    assert_eq!(pa.pause_count, pb.pause_count);
    assert_eq!(pa.pause_count, 2);
    assert!((pa.speech_dur_s - pb.speech_dur_s).abs() <= hop_s + 1e-9);
    assert!((pa.mean_pause_s - pb.mean_pause_s).abs() <= hop_s + 1e-9);
}
