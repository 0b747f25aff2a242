//! Synthetic corpus generation.
//!
//! Produces vowel-like recordings whose perturbation, pitch and pause
//! structure follow a synthetic PHQ-8 label with a configurable coupling
//! strength. The data exists to exercise the pipeline end to end; it carries
//! no clinical meaning.

pub mod voice;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip};
use crate::error::{CoreError, Result};
use crate::evaluation::meta::{metadata_csv, Gender, SampleMeta, Task};
use crate::features::{DEEP_HOP_MS, DEEP_WINDOW_S};
use voice::{periodic_vowel, VowelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub subjects: usize,
    pub samples_per_subject: usize,
    /// Tasks assigned to a subject's samples in rotation.
    pub tasks: Vec<Task>,
    pub phq_mean: f64,
    pub phq_sd: f64,
    pub female_fraction: f64,
    /// 0 = acoustics independent of the label, 1 = fully determined by it.
    pub coupling: f64,
    /// Std of additive white noise relative to the vowel peak amplitude.
    pub noise_level: f64,
    pub sample_rate: u32,
    pub seed: u64,
    pub deep_features: bool,
    pub deep_dim: usize,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            subjects: 60,
            samples_per_subject: 5,
            tasks: Task::ALL.to_vec(),
            phq_mean: 6.56,
            phq_sd: 5.56,
            female_fraction: 0.5,
            coupling: 1.0,
            noise_level: 0.0,
            sample_rate: 16000,
            seed: 7,
            deep_features: true,
            deep_dim: 4096,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::Config(format!("synthetic corpus: {m}")));
        if self.subjects < 1 || self.samples_per_subject < 1 {
            return bad("subject and sample counts must be at least 1");
        }
        if self.tasks.is_empty() {
            return bad("task list is empty");
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return bad("coupling must lie in [0, 1]");
        }
        if !(self.noise_level >= 0.0) {
            return bad("noise level must be nonnegative");
        }
        if !(self.phq_mean > 0.0 && self.phq_sd > 0.0) {
            return bad("severity distribution parameters must be positive");
        }
        if !(0.0..=1.0).contains(&self.female_fraction) {
            return bad("female_fraction must lie in [0, 1]");
        }
        if self.sample_rate < 8000 {
            return bad("sample rate below 8 kHz");
        }
        if self.deep_features && self.deep_dim == 0 {
            return bad("deep_dim must be positive");
        }
        Ok(())
    }
}

/// One generated recording before it is written out.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub meta: SampleMeta,
    pub clip: AudioClip,
    pub deep: Option<Vec<Vec<f64>>>,
}

struct Subject {
    id: String,
    gender: Gender,
    phq8: u8,
    base_f0: f64,
}

fn subjects(spec: &SyntheticCorpusSpec) -> Vec<Subject> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shape = (spec.phq_mean / spec.phq_sd).powi(2);
    let scale = spec.phq_sd * spec.phq_sd / spec.phq_mean;
    let severity = Gamma::new(shape, scale).expect("validated parameters");
    (0..spec.subjects)
        .map(|i| {
            let gender = if rng.gen::<f64>() < spec.female_fraction {
                Gender::Female
            } else {
                Gender::Male
            };
            let phq8 = severity.sample(&mut rng).round().clamp(0.0, 24.0) as u8;
            let (mu, sd) = match gender {
                Gender::Female => (210.0, 18.0),
                _ => (120.0, 12.0),
            };
            let base_f0 = Normal::<f64>::new(mu, sd).unwrap().sample(&mut rng).clamp(90.0, 280.0);
            Subject {
                id: format!("S{:03}", i + 1),
                gender,
                phq8,
                base_f0,
            }
        })
        .collect()
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    rng.set_stream(index as u64 + 1);
    rng
}

fn generate_sample(spec: &SyntheticCorpusSpec, subject: &Subject, rep: usize, index: usize) -> SyntheticSample {
    let mut rng = sample_rng(spec.seed, index);
    let sr = spec.sample_rate;
    let srf = f64::from(sr);
    let z = f64::from(subject.phq8) / 24.0;
    // label-driven severity mixed with a per-sample decoy
    let decoy: f64 = rng.gen();
    let drive = spec.coupling * z + (1.0 - spec.coupling) * decoy;

    let f0 = subject.base_f0 * (1.0 - 0.12 * drive);
    let period_jitter = 0.002 + 0.03 * drive;
    let amplitude_jitter = 0.01 + 0.12 * drive;
    let pause_s = 0.12 + 0.6 * drive;
    let segments = 3;

    let mut samples = vec![0.0; (0.2 * srf) as usize];
    for seg in 0..segments {
        let seg_len = rng.gen_range(0.5..0.8);
        let vowel = VowelSpec {
            sample_rate: sr,
            f0_hz: f0 * rng.gen_range(0.97..1.03),
            duration_s: seg_len,
            amplitude: rng.gen_range(0.5..0.9),
            period_jitter,
            amplitude_jitter,
            alternating_shimmer: 0.0,
        };
        let mut v = periodic_vowel(&vowel, rng.gen());
        // 10 ms onset/offset ramps
        let ramp = (0.01 * srf) as usize;
        let len = v.len();
        for i in 0..ramp.min(len / 2) {
            let g = i as f64 / ramp as f64;
            v[i] *= g;
            v[len - 1 - i] *= g;
        }
        samples.extend(v);
        if seg + 1 < segments {
            let jittered = pause_s * rng.gen_range(0.9..1.1);
            samples.extend(std::iter::repeat_n(0.0, (jittered * srf) as usize));
        }
    }
    samples.extend(std::iter::repeat_n(0.0, (0.1 * srf) as usize));
    if spec.noise_level > 0.0 {
        let noise = Normal::new(0.0, spec.noise_level * 0.7).unwrap();
        for s in samples.iter_mut() {
            *s += noise.sample(&mut rng);
        }
    }
    for s in samples.iter_mut() {
        *s = s.clamp(-1.0, 1.0);
    }

    let task = spec.tasks[rep % spec.tasks.len()];
    let sample_id = format!("{}_{:02}_{}", subject.id, rep, task);
    let clip = AudioClip {
        id: sample_id.clone(),
        sample_rate: sr,
        samples,
    };
    let duration_s = clip.duration_s();

    let deep = spec.deep_features.then(|| {
        let windows = if duration_s >= DEEP_WINDOW_S {
            ((duration_s - DEEP_WINDOW_S) / (DEEP_HOP_MS / 1000.0)).floor() as usize + 1
        } else {
            1
        };
        let deep_drive = spec.coupling * z + (1.0 - spec.coupling) * rng.gen::<f64>();
        let informative = spec.deep_dim.min(64);
        let unit = Normal::new(0.0, 1.0).unwrap();
        (0..windows)
            .map(|_| {
                (0..spec.deep_dim)
                    .map(|j| {
                        let signal = if j < informative {
                            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                            sign * 3.0 * (deep_drive - 0.5)
                        } else {
                            0.0
                        };
                        (signal + unit.sample(&mut rng)).max(0.0)
                    })
                    .collect()
            })
            .collect()
    });

    SyntheticSample {
        meta: SampleMeta {
            sample_id,
            subject_id: subject.id.clone(),
            gender: subject.gender,
            task,
            phq8: subject.phq8,
            duration_s,
        },
        clip,
        deep,
    }
}

/// Generate every sample in memory, in metadata order.
pub fn generate(spec: &SyntheticCorpusSpec) -> Result<Vec<SyntheticSample>> {
    spec.validate()?;
    let subjects = subjects(spec);
    let jobs: Vec<(usize, usize)> = (0..subjects.len())
        .flat_map(|s| (0..spec.samples_per_subject).map(move |r| (s, r)))
        .collect();
    Ok(jobs
        .par_iter()
        .enumerate()
        .map(|(index, &(s, rep))| generate_sample(spec, &subjects[s], rep, index))
        .collect())
}

/// Paths of a corpus written by [`write_corpus`].
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub root: PathBuf,
    pub metadata: PathBuf,
    pub audio_dir: PathBuf,
    pub deep_dir: Option<PathBuf>,
}

impl CorpusLayout {
    pub fn under(root: &Path, deep: bool) -> Self {
        CorpusLayout {
            root: root.to_path_buf(),
            metadata: root.join("metadata.csv"),
            audio_dir: root.join("audio"),
            deep_dir: deep.then(|| root.join("deep")),
        }
    }
}

pub fn deep_matrix_text(rows: &[Vec<f64>]) -> String {
    let mut out = String::with_capacity(rows.len() * rows.first().map_or(0, |r| r.len()) * 7);
    for row in rows {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            if *v == 0.0 {
                out.push('0');
            } else {
                let _ = write!(out, "{v:.4}");
            }
        }
        out.push('\n');
    }
    out
}

/// Write WAVs, `metadata.csv`, optional deep matrices and `corpus.json`.
pub fn write_corpus(spec: &SyntheticCorpusSpec, root: &Path) -> Result<CorpusLayout> {
    let samples = generate(spec)?;
    let layout = CorpusLayout::under(root, spec.deep_features);
    std::fs::create_dir_all(&layout.audio_dir).map_err(|e| CoreError::io(&layout.audio_dir, e))?;
    if let Some(d) = &layout.deep_dir {
        std::fs::create_dir_all(d).map_err(|e| CoreError::io(d, e))?;
    }
    samples.par_iter().try_for_each(|s| -> Result<()> {
        write_wav(layout.audio_dir.join(format!("{}.wav", s.meta.sample_id)), &s.clip)?;
        if let (Some(dir), Some(rows)) = (&layout.deep_dir, &s.deep) {
            crate::io::write_atomic_str(&dir.join(format!("{}.csv", s.meta.sample_id)), &deep_matrix_text(rows))?;
        }
        Ok(())
    })?;
    let metas: Vec<SampleMeta> = samples.into_iter().map(|s| s.meta).collect();
    crate::io::write_atomic_str(&layout.metadata, &metadata_csv(&metas)?)?;
    crate::io::write_atomic_str(&root.join("corpus.json"), &serde_json::to_string_pretty(spec)?)?;
    Ok(layout)
}
