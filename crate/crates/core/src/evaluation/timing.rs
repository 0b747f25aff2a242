//! Wall-clock stage accounting for the cost comparison.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::models::ModelFamily;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub data_loading_s: f64,
    /// Standardization and feature selection.
    pub preprocessing_s: f64,
    /// Grid search plus final fit, per family.
    pub training_s: BTreeMap<ModelFamily, f64>,
    pub prediction_s: BTreeMap<ModelFamily, f64>,
    /// Size on disk of the feature files the run consumed.
    pub feature_bytes: u64,
    /// Resident-set high-water mark of the process, where the OS reports it.
    pub peak_memory_bytes: Option<u64>,
}

impl StageTimings {
    pub fn training(&self, f: ModelFamily) -> f64 {
        self.training_s.get(&f).copied().unwrap_or(0.0)
    }

    pub fn prediction(&self, f: ModelFamily) -> f64 {
        self.prediction_s.get(&f).copied().unwrap_or(0.0)
    }

    /// Loading, preprocessing, training and prediction for one family.
    pub fn total(&self, f: ModelFamily) -> f64 {
        self.data_loading_s + self.preprocessing_s + self.training(f) + self.prediction(f)
    }

    pub fn add_training(&mut self, f: ModelFamily, s: f64) {
        *self.training_s.entry(f).or_default() += s;
    }

    pub fn add_prediction(&mut self, f: ModelFamily, s: f64) {
        *self.prediction_s.entry(f).or_default() += s;
    }

    pub fn families(&self) -> Vec<ModelFamily> {
        let mut f: Vec<ModelFamily> = self
            .training_s
            .keys()
            .chain(self.prediction_s.keys())
            .copied()
            .collect();
        f.sort();
        f.dedup();
        f
    }

    /// Element-wise median over repeated runs (byte counts from the first).
    pub fn median(runs: &[StageTimings]) -> StageTimings {
        let Some(first) = runs.first() else {
            return StageTimings::default();
        };
        let med = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        };
        let mut out = StageTimings {
            data_loading_s: med(runs.iter().map(|r| r.data_loading_s).collect()),
            preprocessing_s: med(runs.iter().map(|r| r.preprocessing_s).collect()),
            feature_bytes: first.feature_bytes,
            peak_memory_bytes: runs.iter().filter_map(|r| r.peak_memory_bytes).max(),
            ..Default::default()
        };
        for f in first.families() {
            out.training_s
                .insert(f, med(runs.iter().map(|r| r.training(f)).collect()));
            out.prediction_s
                .insert(f, med(runs.iter().map(|r| r.prediction(f)).collect()));
        }
        out
    }
}

/// Seconds elapsed while running `f`.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Peak resident set size from `/proc/self/status` (Linux only).
pub fn peak_memory_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
