//! Subject-independent, severity-stratified fold assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::meta::SampleMeta;
use crate::error::{CoreError, Result};

pub const SEVERITY_BINS: usize = 4;

/// Severity bin of a PHQ-8 score: 0–4, 5–9, 10–14, 15–24.
pub fn severity_bin(score: f64) -> usize {
    if score < 5.0 {
        0
    } else if score < 10.0 {
        1
    } else if score < 15.0 {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of every subject.
    pub subject_fold: BTreeMap<String, usize>,
    /// Subjects per severity bin, per fold.
    pub bin_histogram: Vec<[usize; SEVERITY_BINS]>,
}

impl FoldPlan {
    pub fn fold_of(&self, subject: &str) -> Option<usize> {
        self.subject_fold.get(subject).copied()
    }

    /// Fold index for every metadata row.
    pub fn sample_folds(&self, meta: &[SampleMeta]) -> Result<Vec<usize>> {
        meta.iter()
            .map(|m| {
                self.fold_of(&m.subject_id)
                    .ok_or_else(|| CoreError::Fold(format!("subject {} is not in the fold plan", m.subject_id)))
            })
            .collect()
    }

    pub fn subjects_in(&self, fold: usize) -> Vec<&str> {
        self.subject_fold
            .iter()
            .filter(|(_, f)| **f == fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

/// Deal subjects into `k` folds: subjects are binned by severity, each bin is
/// sorted by id and shuffled with its own seeded stream, then dealt
/// round-robin with a position counter that continues across bins.
pub fn assign_subjects(subjects: &BTreeMap<String, f64>, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(CoreError::Fold(format!("need k >= 2 folds, got {k}")));
    }
    if subjects.len() < k {
        return Err(CoreError::Fold(format!(
            "{} subjects cannot fill {k} subject-independent folds",
            subjects.len()
        )));
    }
    let mut bins: Vec<Vec<&String>> = vec![Vec::new(); SEVERITY_BINS];
    for (s, sev) in subjects {
        bins[severity_bin(*sev)].push(s);
    }
    let mut subject_fold = BTreeMap::new();
    let mut bin_histogram = vec![[0usize; SEVERITY_BINS]; k];
    let mut position = 0usize;
    for (b, members) in bins.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        members.shuffle(&mut rng);
        for s in members.iter() {
            let f = position % k;
            subject_fold.insert((*s).clone(), f);
            bin_histogram[f][b] += 1;
            position += 1;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        subject_fold,
        bin_histogram,
    })
}

/// Subject severity is the maximum score over that subject's samples.
pub fn subject_severity<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (s, v) in pairs {
        let e = out.entry(s.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(v);
    }
    out
}

pub fn make_folds(meta: &[SampleMeta], k: usize, seed: u64) -> Result<FoldPlan> {
    let sev = subject_severity(meta.iter().map(|m| (m.subject_id.as_str(), f64::from(m.phq8))));
    assign_subjects(&sev, k, seed)
}

/// Per-row fold indices for grouped rows with per-row severity labels.
pub fn group_folds(groups: &[String], severity: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    let sev = subject_severity(groups.iter().map(String::as_str).zip(severity.iter().copied()));
    let plan = assign_subjects(&sev, k, seed)?;
    Ok(groups.iter().map(|g| plan.subject_fold[g]).collect())
}
