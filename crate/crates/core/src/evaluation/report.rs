//! JSON, markdown and CSV renderings of evaluation and cost results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::{CvOutcome, EvaluationReport, FeatureSource, Prediction};
use super::meta::{Gender, Task};
use super::timing::StageTimings;
use crate::error::{CoreError, Result};
use crate::models::ModelFamily;

pub fn report_json(report: &EvaluationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_report(text: &str) -> Result<EvaluationReport> {
    Ok(serde_json::from_str(text)?)
}

fn f2(v: f64) -> String {
    format!("{v:.2}")
}

/// Overall and per-gender error per model, then per-task error, then the
/// error correlation analysis.
pub fn render_markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Evaluation: {} features\n\n{} samples, {} subjects, {} features, {}-fold subject-independent CV (seed {}), gender mode `{}`.\nLabel mean {:.2}, std {:.2}. Manifest `{}`, config `{}`.\n",
        report.feature_source.label(),
        report.n_samples,
        report.n_subjects,
        report.n_features,
        report.k,
        report.seed,
        match report.gender_mode {
            super::cv::GenderMode::Separate => "separate",
            super::cv::GenderMode::Pooled => "pooled",
        },
        report.label_mean,
        report.label_std,
        report.manifest_id,
        report.config_hash,
    );

    out.push_str("## Regression error by gender\n\n| Model | Group | RMSE | MAE |\n|---|---|---|---|\n");
    for m in &report.models {
        for g in [Gender::Male, Gender::Female] {
            let (r, a) = m
                .gender(g)
                .map_or(("-".into(), "-".into()), |x| (f2(x.rmse), f2(x.mae)));
            let _ = writeln!(out, "| {} | {} | {} | {} |", m.label, capitalize(g.as_str()), r, a);
        }
        let _ = writeln!(
            out,
            "| {} | Overall | {} | {} |",
            m.label,
            f2(m.overall.rmse),
            f2(m.overall.mae)
        );
    }
    let others: Vec<_> = report
        .models
        .iter()
        .filter_map(|m| m.gender(Gender::Other).map(|x| (m.label.as_str(), x)))
        .collect();
    if !others.is_empty() {
        out.push_str("\nOther or unknown gender:\n\n| Model | n | RMSE | MAE |\n|---|---|---|---|\n");
        for (l, x) in others {
            let _ = writeln!(out, "| {} | {} | {} | {} |", l, x.n, f2(x.rmse), f2(x.mae));
        }
    }

    out.push_str("\n## Regression error by task\n\n| Task |");
    for m in &report.models {
        let _ = write!(out, " {} RMSE | {} MAE |", m.label, m.label);
    }
    out.push_str("\n|---|");
    for _ in &report.models {
        out.push_str("---|---|");
    }
    out.push('\n');
    for t in Task::ALL {
        if !report
            .models
            .iter()
            .any(|m| m.by_task.iter().any(|g| g.group == t.as_str()))
        {
            continue;
        }
        let _ = write!(out, "| {} |", t.label());
        for m in &report.models {
            match m.by_task.iter().find(|g| g.group == t.as_str()) {
                Some(g) => {
                    let _ = write!(out, " {} | {} |", f2(g.metrics.rmse), f2(g.metrics.mae));
                }
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }

    out.push_str("\n## Error analysis\n\n| Model | CCC(abs error, duration) | CCC(abs error, PHQ-8) | male vs female t | df | p |\n|---|---|---|---|---|---|\n");
    for m in &report.models {
        let (t, df, p) = m.gender_error_ttest.map_or(("-".into(), "-".into(), "-".into()), |t| {
            (f2(t.t), format!("{}", t.df), format!("{:.3e}", t.p))
        });
        let _ = writeln!(
            out,
            "| {} | {:.3} | {:.3} | {} | {} | {} |",
            m.label, m.ccc_abs_error_vs_duration, m.ccc_abs_error_vs_phq8, t, df, p
        );
    }

    out.push_str("\n## Per-fold error\n\n| Model |");
    for f in 0..report.k {
        let _ = write!(out, " fold {f} RMSE |");
    }
    out.push_str("\n|---|");
    for _ in 0..report.k {
        out.push_str("---|");
    }
    out.push('\n');
    for m in &report.models {
        let _ = write!(out, "| {} |", m.label);
        for f in &m.per_fold {
            let _ = write!(out, " {} |", f2(f.metrics.rmse));
        }
        out.push('\n');
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map_or(String::new(), |f| f.to_uppercase().collect::<String>() + c.as_str())
}

pub const PREDICTION_HEADER: [&str; 10] = [
    "model",
    "sample_id",
    "fold",
    "model_group",
    "truth",
    "prediction",
    "abs_error",
    "duration_s",
    "gender",
    "task",
];

/// Out-of-fold predictions of every model, one row per sample and model.
pub fn predictions_csv(outcome: &CvOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PREDICTION_HEADER)?;
    for (family, preds) in &outcome.predictions {
        for p in preds {
            write_prediction(&mut w, *family, p)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CoreError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CoreError::Format(e.to_string()))
}

fn write_prediction(w: &mut csv::Writer<Vec<u8>>, family: ModelFamily, p: &Prediction) -> Result<()> {
    w.write_record([
        family.as_str().to_string(),
        p.sample_id.clone(),
        p.fold.to_string(),
        p.model_group.clone(),
        p.truth.to_string(),
        p.prediction.to_string(),
        p.abs_error.to_string(),
        p.duration_s.to_string(),
        p.gender.as_str().to_string(),
        p.task.as_str().to_string(),
    ])?;
    Ok(())
}

/// Stage costs of one feature source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostColumn {
    pub source: FeatureSource,
    pub n_samples: usize,
    pub n_features: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub warmup_runs: usize,
    pub timed_runs: usize,
    pub families: Vec<ModelFamily>,
    pub columns: Vec<CostColumn>,
    pub warnings: Vec<String>,
}

pub const COST_ROWS: [&str; 5] = ["Data loading", "Preprocessing", "Model training", "Prediction", "Total"];

impl CostReport {
    pub fn column(&self, s: FeatureSource) -> Option<&CostColumn> {
        self.columns.iter().find(|c| c.source == s)
    }

    /// Deep over conventional feature bytes, when both paths ran.
    pub fn byte_ratio(&self) -> Option<f64> {
        let c = self.column(FeatureSource::Conventional)?.timings.feature_bytes;
        let d = self.column(FeatureSource::Deep)?.timings.feature_bytes;
        (c > 0).then(|| d as f64 / c as f64)
    }

    /// Row labels of the stage table, in order.
    pub fn row_labels(&self) -> Vec<String> {
        let mut rows = vec![COST_ROWS[0].to_string(), COST_ROWS[1].to_string()];
        for stage in &COST_ROWS[2..] {
            for f in &self.families {
                rows.push(format!("{stage} ({})", f.label()));
            }
        }
        rows
    }

    fn cell(&self, c: &CostColumn, row: usize) -> f64 {
        let t = &c.timings;
        let n = self.families.len();
        match row {
            0 => t.data_loading_s,
            1 => t.preprocessing_s,
            r if r < 2 + n => t.training(self.families[r - 2]),
            r if r < 2 + 2 * n => t.prediction(self.families[r - 2 - n]),
            r => t.total(self.families[r - 2 - 2 * n]),
        }
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("# Time elapsed in different stages (seconds)\n\n| Stage |");
        for c in &self.columns {
            let _ = write!(out, " {} |", c.source.label());
        }
        out.push_str("\n|---|");
        for _ in &self.columns {
            out.push_str("---|");
        }
        out.push('\n');
        for (i, label) in self.row_labels().iter().enumerate() {
            let _ = write!(out, "| {label} |");
            for c in &self.columns {
                let _ = write!(out, " {:.3} |", self.cell(c, i));
            }
            out.push('\n');
        }
        out.push_str("\n## Feature storage\n\n| Source | Samples | Features per sample | Feature bytes on disk | Peak RSS (bytes) |\n|---|---|---|---|---|\n");
        for c in &self.columns {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                c.source.label(),
                c.n_samples,
                c.n_features,
                c.timings.feature_bytes,
                c.timings.peak_memory_bytes.map_or("-".into(), |b| b.to_string())
            );
        }
        if let Some(r) = self.byte_ratio() {
            let _ = writeln!(out, "\nDeep / conventional feature bytes: {r:.1}x");
        }
        let conv = self.column(FeatureSource::Conventional);
        let deep = self.column(FeatureSource::Deep);
        if let (Some(c), Some(d)) = (conv, deep) {
            out.push_str("\n## Time ratio (deep / conventional)\n\n| Model | Total ratio |\n|---|---|\n");
            for f in &self.families {
                let (a, b) = (c.timings.total(*f), d.timings.total(*f));
                let _ = writeln!(
                    out,
                    "| {} | {} |",
                    f.label(),
                    if a > 0.0 { format!("{:.1}x", b / a) } else { "-".into() }
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "\nWarning: {w}");
        }
        out
    }
}
