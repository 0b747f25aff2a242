//! Ingestion of externally computed deep-representation feature matrices.
//!
//! One file per sample (file stem = sample id), one row per 1 s analysis
//! window at a 300 ms hop, comma- or whitespace-separated.

use std::path::Path;

use super::FeatureVector;
use crate::error::{CoreError, Result};

pub const DEEP_MANIFEST_ID: &str = "deep-meanstd-v1";
pub const DEEP_WINDOW_S: f64 = 1.0;
pub const DEEP_HOP_MS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DeepFeatureMatrix {
    pub sample_id: String,
    pub rows: Vec<Vec<f64>>,
    pub window_s: f64,
    pub hop_ms: f64,
}

impl DeepFeatureMatrix {
    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }
}

pub fn parse_deep_matrix(sample_id: &str, text: &str) -> Result<DeepFeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| CoreError::Format(format!("{sample_id}:{}: not a number: {t:?}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CoreError::Format(format!(
                    "{sample_id}:{}: ragged row of width {} (expected {})",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CoreError::EmptyInput(format!("{sample_id}: empty deep feature matrix")));
    }
    Ok(DeepFeatureMatrix {
        sample_id: sample_id.to_string(),
        rows,
        window_s: DEEP_WINDOW_S,
        hop_ms: DEEP_HOP_MS,
    })
}

pub fn ingest_deep_features(path: &Path) -> Result<DeepFeatureMatrix> {
    let text = crate::io::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_deep_matrix(&id, &text)
}

/// Per-dimension mean followed by per-dimension population std over windows.
pub fn aggregate_deep(m: &DeepFeatureMatrix) -> FeatureVector {
    let d = m.dim();
    let n = m.rows.len() as f64;
    let mut mean = vec![0.0; d];
    for row in &m.rows {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; d];
    for row in &m.rows {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let mut values = mean;
    values.extend(var.into_iter().map(|v| (v / n).sqrt()));
    FeatureVector {
        manifest_id: DEEP_MANIFEST_ID.into(),
        values,
    }
}

pub fn deep_feature_names(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|j| format!("deep_mean_{j}"))
        .chain((0..dim).map(|j| format!("deep_std_{j}")))
        .collect()
}
