//! End-to-end stages driven by a [`PipelineConfig`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{condition, load_wav, write_wav, AudioClip};
use crate::config::PipelineConfig;
use crate::error::{CoreError, Result};
use crate::evaluation::timing::{peak_memory_bytes, timed};
use crate::evaluation::{
    evaluate_cv, feature_shift_tests, load_metadata, predictions_csv, render_markdown, report_json, CostColumn,
    CostReport, CvOutcome, Dataset, FeatureSource, SampleMeta, ShiftSummary, StageTimings,
};
use crate::features::{
    aggregate_deep, deep_feature_names, extract_conventional, ingest_deep_features, FeatureManifest, DEEP_MANIFEST_ID,
};
use crate::io::{dir_size, file_size, write_atomic_str};
use crate::matrix::FeatureMatrix;
use crate::preprocess::{mrmr_select, Standardizer};

pub const FEATURES_FILE: &str = "features.csv";
pub const FLAGS_FILE: &str = "feature_flags.csv";
pub const ERRORS_FILE: &str = "extract_errors.csv";

/// Feature values and imputation flags of one recording.
type Extracted = Result<(Vec<f64>, String)>;

/// Metadata filtered to the configured tasks.
pub fn load_meta(cfg: &PipelineConfig) -> Result<Vec<SampleMeta>> {
    let meta = load_metadata(&cfg.data.metadata)?;
    if cfg.data.tasks.is_empty() {
        return Ok(meta);
    }
    let keep: BTreeSet<_> = cfg.data.tasks.iter().copied().collect();
    Ok(meta.into_iter().filter(|m| keep.contains(&m.task)).collect())
}

pub fn audio_path(cfg: &PipelineConfig, sample_id: &str) -> PathBuf {
    cfg.data.audio_dir.join(format!("{sample_id}.wav"))
}

/// Decode and condition one recording as configured.
pub fn load_conditioned(cfg: &PipelineConfig, sample_id: &str, enhance: bool) -> Result<AudioClip> {
    let clip = load_wav(audio_path(cfg, sample_id))?;
    let clip = AudioClip {
        id: sample_id.to_string(),
        ..clip
    };
    let enh = (enhance && cfg.audio.enhance).then_some(&cfg.audio.enhancement);
    condition(&clip, cfg.audio.target_dbfs, enh, cfg.audio.order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub rows: usize,
    pub computed: usize,
    pub reused: usize,
    pub errors: Vec<(String, String)>,
    pub features_path: PathBuf,
}

impl ExtractSummary {
    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }
}

fn read_flags(path: &Path) -> Result<BTreeMap<String, String>> {
    if !path.is_file() {
        return Ok(BTreeMap::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        out.insert(rec[0].to_string(), rec.get(1).unwrap_or("").to_string());
    }
    Ok(out)
}

fn two_column_csv(header: [&str; 2], rows: &[(String, String)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a, b])?;
    }
    let bytes = w.into_inner().map_err(|e| CoreError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CoreError::Format(e.to_string()))
}

/// Extract conventional features for every metadata row into `out_dir`.
///
/// Rows already present in an existing feature file are reused, so an
/// interrupted run can be resumed. Output rows follow metadata order. A
/// missing or undecodable recording is recorded in the error file and the
/// run carries on.
pub fn extract_corpus(cfg: &PipelineConfig, out_dir: &Path, enhance: bool) -> Result<ExtractSummary> {
    let meta = load_meta(cfg)?;
    let manifest = cfg.manifest()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir, e))?;
    let features_path = out_dir.join(FEATURES_FILE);
    let flags_path = out_dir.join(FLAGS_FILE);

    let mut existing: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    if features_path.is_file() {
        let prev = FeatureMatrix::read_csv(&features_path)?;
        if prev.names == manifest.entries {
            for (id, row) in prev.ids.iter().zip(prev.values.rows()) {
                existing.insert(id.clone(), row.to_vec());
            }
        }
    }
    let old_flags = read_flags(&flags_path)?;

    let todo: Vec<&SampleMeta> = meta.iter().filter(|m| !existing.contains_key(&m.sample_id)).collect();
    let results: Vec<(String, Extracted)> = todo
        .par_iter()
        .map(|m| {
            let r = load_conditioned(cfg, &m.sample_id, enhance)
                .and_then(|clip| extract_conventional(&clip, &manifest, &cfg.features.extraction))
                .map(|e| (e.vector.values, e.flags.join(";")));
            (m.sample_id.clone(), r)
        })
        .collect();

    let mut new_flags = BTreeMap::new();
    let mut errors = Vec::new();
    let computed = results.iter().filter(|(_, r)| r.is_ok()).count();
    for (id, r) in results {
        match r {
            Ok((values, flags)) => {
                existing.insert(id.clone(), values);
                new_flags.insert(id, flags);
            }
            Err(e) => errors.push((id, e.to_string())),
        }
    }

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut flag_rows = Vec::new();
    for m in &meta {
        if let Some(v) = existing.get(&m.sample_id) {
            ids.push(m.sample_id.clone());
            rows.push(v.clone());
            let f = new_flags
                .get(&m.sample_id)
                .or_else(|| old_flags.get(&m.sample_id))
                .cloned()
                .unwrap_or_default();
            flag_rows.push((m.sample_id.clone(), f));
        }
    }
    let reused = ids.len() - computed;
    let matrix = FeatureMatrix::from_rows(ids, manifest.entries.clone(), &rows)?;
    if computed > 0 || !features_path.is_file() {
        matrix.write_csv(&features_path)?;
        write_atomic_str(&flags_path, &two_column_csv(["sample_id", "imputed"], &flag_rows)?)?;
    }
    write_atomic_str(
        &out_dir.join(ERRORS_FILE),
        &two_column_csv(["sample_id", "error"], &errors)?,
    )?;
    Ok(ExtractSummary {
        rows: matrix.nrows(),
        computed,
        reused,
        errors,
        features_path,
    })
}

/// Aggregated deep features for every metadata row.
pub fn load_deep_matrix(meta: &[SampleMeta], deep_dir: &Path) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = meta
        .par_iter()
        .map(|m| {
            let mut d = ingest_deep_features(&deep_dir.join(format!("{}.csv", m.sample_id)))?;
            d.sample_id = m.sample_id.clone();
            Ok(aggregate_deep(&d).values)
        })
        .collect::<Result<_>>()?;
    let dim = rows.first().map_or(0, |r| r.len() / 2);
    if rows.iter().any(|r| r.len() != 2 * dim) {
        return Err(CoreError::Format("deep matrices have different widths".into()));
    }
    FeatureMatrix::from_rows(
        meta.iter().map(|m| m.sample_id.clone()).collect(),
        deep_feature_names(dim),
        &rows,
    )
}

fn features_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join("features")
}

/// Load the dataset for one feature source, timing the load and recording
/// the bytes of the feature files read.
pub fn load_dataset(cfg: &PipelineConfig, source: FeatureSource) -> Result<(Dataset, f64, u64)> {
    let meta = load_meta(cfg)?;
    match source {
        FeatureSource::Conventional => {
            let path = features_dir(cfg).join(FEATURES_FILE);
            if !path.is_file() {
                return Err(CoreError::Config(format!(
                    "no extracted features at {}; run extraction first",
                    path.display()
                )));
            }
            let manifest = cfg.manifest()?;
            let (m, secs) = timed(|| FeatureMatrix::read_csv(&path));
            let ds = Dataset::new(meta, &m?, source, manifest.version)?;
            Ok((ds, secs, file_size(&path)?))
        }
        FeatureSource::Deep => {
            let dir = cfg
                .data
                .deep_dir
                .clone()
                .ok_or_else(|| CoreError::Config("data.deep_dir is not set".into()))?;
            let (m, secs) = timed(|| load_deep_matrix(&meta, &dir));
            let bytes: u64 = meta
                .iter()
                .map(|s| file_size(&dir.join(format!("{}.csv", s.sample_id))))
                .sum::<Result<u64>>()?;
            let ds = Dataset::new(meta, &m?, source, DEEP_MANIFEST_ID)?;
            Ok((ds, secs, bytes))
        }
    }
}

/// Full cross-validated evaluation of the configured feature source.
pub fn run_cv(cfg: &PipelineConfig) -> Result<CvOutcome> {
    cfg.validate()?;
    let (data, load_s, bytes) = load_dataset(cfg, cfg.data.feature_source)?;
    let mut outcome = evaluate_cv(&data, &cfg.evaluation)?;
    outcome.report.config_hash = cfg.hash()?;
    outcome.timings.data_loading_s = load_s;
    outcome.timings.feature_bytes = bytes;
    outcome.timings.peak_memory_bytes = peak_memory_bytes();
    Ok(outcome)
}

/// Write report.json, report.md, predictions.csv, timings.json and the
/// per-fold standardizer and selection files under `dir`.
pub fn write_run_outputs(outcome: &CvOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    write_atomic_str(&dir.join("report.json"), &report_json(&outcome.report)?)?;
    write_atomic_str(&dir.join("report.md"), &render_markdown(&outcome.report))?;
    write_atomic_str(&dir.join("predictions.csv"), &predictions_csv(outcome)?)?;
    write_atomic_str(
        &dir.join("timings.json"),
        &(serde_json::to_string_pretty(&outcome.timings)? + "\n"),
    )?;
    let folds = dir.join("folds");
    std::fs::create_dir_all(&folds).map_err(|e| CoreError::io(&folds, e))?;
    for a in &outcome.artifacts {
        let stem = format!("fold{}_{}", a.fold, a.group);
        a.standardizer
            .write_csv(&folds.join(format!("{stem}_standardizer.csv")))?;
        write_atomic_str(&folds.join(format!("{stem}_selected.txt")), &a.selection.to_text())?;
    }
    Ok(())
}

/// Stage costs for each available feature source, as the median of the
/// timed runs after discarding warm-up runs.
pub fn benchmark(cfg: &PipelineConfig) -> Result<CostReport> {
    cfg.validate()?;
    let mut cv = cfg.clone();
    cv.evaluation.families = cfg.benchmark.families.clone();
    let mut warnings = Vec::new();
    let mut sources = Vec::new();
    if features_dir(cfg).join(FEATURES_FILE).is_file() {
        sources.push(FeatureSource::Conventional);
    } else {
        warnings.push("conventional features not extracted; column omitted".to_string());
    }
    match &cfg.data.deep_dir {
        Some(d) if d.is_dir() => sources.push(FeatureSource::Deep),
        _ => warnings.push("no deep feature matrices; column omitted".to_string()),
    }
    if sources.is_empty() {
        return Err(CoreError::Config("no feature source available to benchmark".into()));
    }
    let mut columns = Vec::new();
    for source in sources {
        let mut runs = Vec::new();
        let mut shape = (0, 0);
        for i in 0..cfg.benchmark.warmup_runs + cfg.benchmark.timed_runs {
            let (data, load_s, bytes) = load_dataset(&cv, source)?;
            shape = (data.len(), data.features.ncols());
            let mut outcome = evaluate_cv(&data, &cv.evaluation)?;
            outcome.timings.data_loading_s = load_s;
            outcome.timings.feature_bytes = bytes;
            outcome.timings.peak_memory_bytes = peak_memory_bytes();
            if i >= cfg.benchmark.warmup_runs {
                runs.push(outcome.timings);
            }
        }
        columns.push(CostColumn {
            source,
            n_samples: shape.0,
            n_features: shape.1,
            timings: StageTimings::median(&runs),
        });
    }
    Ok(CostReport {
        warmup_runs: cfg.benchmark.warmup_runs,
        timed_runs: cfg.benchmark.timed_runs,
        families: cfg.benchmark.families.clone(),
        columns,
        warnings,
    })
}

/// Enhanced recordings plus a per-feature test of how much enhancement
/// shifts the conventional features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhanceSummary {
    pub written: usize,
    pub significance: ShiftSummary,
}

pub fn enhance_corpus(cfg: &PipelineConfig, out_dir: &Path, alpha: f64) -> Result<EnhanceSummary> {
    let meta = load_meta(cfg)?;
    let manifest = cfg.manifest()?;
    let wav_dir = out_dir.join("enhanced");
    std::fs::create_dir_all(&wav_dir).map_err(|e| CoreError::io(&wav_dir, e))?;
    let mut enhanced_cfg = cfg.clone();
    enhanced_cfg.audio.enhance = true;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = meta
        .par_iter()
        .map(|m| -> Result<_> {
            let plain = load_conditioned(cfg, &m.sample_id, false)?;
            let enhanced = load_conditioned(&enhanced_cfg, &m.sample_id, true)?;
            write_wav(wav_dir.join(format!("{}.wav", m.sample_id)), &enhanced)?;
            let f = &cfg.features.extraction;
            Ok((
                extract_conventional(&plain, &manifest, f)?.vector.values,
                extract_conventional(&enhanced, &manifest, f)?.vector.values,
            ))
        })
        .collect::<Result<_>>()?;
    let ids: Vec<String> = meta.iter().map(|m| m.sample_id.clone()).collect();
    let (before, after): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let before = FeatureMatrix::from_rows(ids.clone(), manifest.entries.clone(), &before)?;
    let after = FeatureMatrix::from_rows(ids, manifest.entries.clone(), &after)?;
    let significance = feature_shift_tests(&before, &after, alpha)?;
    Ok(EnhanceSummary {
        written: meta.len(),
        significance,
    })
}

/// Exploratory selection over the whole extracted set (not used by CV,
/// which refits inside each fold).
pub fn select_features(cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<String>> {
    let (data, _, _) = load_dataset(cfg, cfg.data.feature_source)?;
    let y = data.labels();
    let st = Standardizer::fit(&data.features.values, &data.features.names)?;
    let z = st.transform(&data.features.values)?;
    let sel = mrmr_select(&z, &data.features.names, &y, cfg.evaluation.selection_fraction)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir, e))?;
    st.write_csv(&out_dir.join("standardizer.csv"))?;
    write_atomic_str(&out_dir.join("selected.txt"), &sel.to_text())?;
    write_atomic_str(
        &out_dir.join("selection.json"),
        &(serde_json::to_string_pretty(&sel)? + "\n"),
    )?;
    Ok(sel.names())
}

/// Feature bytes on disk for both paths, without running any models.
pub fn feature_bytes(cfg: &PipelineConfig) -> Result<(Option<u64>, Option<u64>)> {
    let conv = features_dir(cfg).join(FEATURES_FILE);
    let c = conv.is_file().then(|| file_size(&conv)).transpose()?;
    let d = match &cfg.data.deep_dir {
        Some(dir) if dir.is_dir() => Some(dir_size(dir)?),
        _ => None,
    };
    Ok((c, d))
}

pub fn manifest_or_default(cfg: &PipelineConfig) -> FeatureManifest {
    cfg.manifest().unwrap_or_else(|_| FeatureManifest::v1())
}

pub fn extracted_features_path(cfg: &PipelineConfig) -> PathBuf {
    features_dir(cfg).join(FEATURES_FILE)
}
