//! Greedy minimum-redundancy maximum-relevance selection, quotient form.
//!
//! Relevance is `|corr(f, y)|`, redundancy the mean `|corr(f, s)|` over the
//! already selected `s` (defined as 1 before anything is selected), and each
//! step takes the feature maximizing relevance / redundancy. Ties go to the
//! lower column index.
//!
//! The quotient alone cannot tell an exact copy of a selected feature from an
//! unrelated one (both score about 1), so candidates perfectly correlated
//! with something already selected are deferred until nothing else is left.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

const REDUNDANCY_FLOOR: f64 = 1e-12;
/// |corr| at or above this marks a candidate as a copy of a selected feature.
const DUPLICATE_CORR: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub index: usize,
    pub name: String,
    pub relevance: f64,
    pub redundancy: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Greedy selection order.
    pub steps: Vec<SelectionStep>,
    pub fraction: f64,
}

impl SelectionResult {
    pub fn indices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.index).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.name.clone()).collect()
    }

    /// One feature name per line, in selection order.
    pub fn to_text(&self) -> String {
        let mut s = self.names().join("\n");
        s.push('\n');
        s
    }
}

/// `ceil(fraction · p)`, at least 1 and at most `p`.
pub fn selection_size(fraction: f64, p: usize) -> usize {
    // guard against 0.1 * 30 = 3.0000000000000004
    let raw = fraction * p as f64;
    let k = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    (k as usize).clamp(1, p.max(1))
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Columns centered and scaled to unit norm, so a dot product is a correlation.
fn unit_columns(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let m = col.sum() / col.len() as f64;
        col.mapv_inplace(|v| v - m);
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        }
    }
    out
}

pub fn mrmr_select(x: &Array2<f64>, names: &[String], target: &[f64], fraction: f64) -> Result<SelectionResult> {
    let (n, p) = x.dim();
    if target.len() != n {
        return Err(CoreError::Shape {
            expected: n,
            got: target.len(),
        });
    }
    if names.len() != p {
        return Err(CoreError::Shape {
            expected: p,
            got: names.len(),
        });
    }
    if p == 0 {
        return Err(CoreError::InsufficientData("no features to select from".into()));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Data("non-finite target".into()));
    }
    let y = ndarray::Array1::from(target.to_vec());
    let ym = y.sum() / n as f64;
    if y.iter().all(|v| (v - ym).abs() < 1e-12) {
        return Err(CoreError::UndefinedRelevance);
    }
    let k = selection_size(fraction, p);

    let units = unit_columns(x);
    let relevance: Vec<f64> = (0..p).map(|j| pearson(x.column(j), y.view()).abs()).collect();
    let mut redundancy_sum = vec![0.0; p];
    let mut duplicate = vec![false; p];
    let mut chosen = vec![false; p];
    let mut steps = Vec::with_capacity(k);

    for step in 0..k {
        let fresh_left = (0..p).any(|j| !chosen[j] && !duplicate[j]);
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..p {
            if chosen[j] || (fresh_left && duplicate[j]) {
                continue;
            }
            let red = if step == 0 {
                1.0
            } else {
                redundancy_sum[j] / step as f64
            };
            let score = relevance[j] / red.max(REDUNDANCY_FLOOR);
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((j, score, red));
            }
        }
        let (j, score, red) = best.expect("k <= p leaves a candidate");
        chosen[j] = true;
        steps.push(SelectionStep {
            index: j,
            name: names[j].clone(),
            relevance: relevance[j],
            redundancy: red,
            score,
        });
        let col = units.column(j);
        for (i, acc) in redundancy_sum.iter_mut().enumerate() {
            if !chosen[i] {
                let r = units.column(i).dot(&col).abs().min(1.0);
                *acc += r;
                duplicate[i] |= r >= DUPLICATE_CORR;
            }
        }
    }
    Ok(SelectionResult { steps, fraction })
}
