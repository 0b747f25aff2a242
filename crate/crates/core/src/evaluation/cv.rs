//! Nested, subject-independent cross-validation.
//!
//! Every outer fold fits standardization, mRMR selection, grid search and the
//! final model on its training rows only. Test sample ids are passed to the
//! fit stage as a forbidden set, and any overlap aborts the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::folds::{make_folds, FoldPlan, SEVERITY_BINS};
use super::meta::{Gender, SampleMeta, Task};
use super::metrics::{ccc, mae, mean, rmse, variance};
use super::stats::{ttest_two_sample, TTest};
use super::timing::{timed, StageTimings};
use crate::error::{CoreError, Result};
use crate::matrix::FeatureMatrix;
use crate::models::{grid_search, GridResult, GridSearchPlan, Hyperparams, ModelFamily, RegressorModel};
use crate::preprocess::{mrmr_select, SelectionResult, Standardizer};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Conventional,
    Deep,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSource::Conventional => "conventional",
            FeatureSource::Deep => "deep",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureSource::Conventional => "Conventional",
            FeatureSource::Deep => "Deep",
        }
    }
}

impl fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSource {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conventional" => Ok(FeatureSource::Conventional),
            "deep" => Ok(FeatureSource::Deep),
            other => Err(CoreError::Config(format!("unknown feature source {other:?}"))),
        }
    }
}

/// How per-gender results are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenderMode {
    /// Separate male and female models; other genders use a pooled model.
    #[default]
    Separate,
    /// One model for everyone; metrics are sliced by gender afterwards.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub selection_fraction: f64,
    pub gender_mode: GenderMode,
    pub clamp_predictions: bool,
    pub families: Vec<ModelFamily>,
    pub grid: GridSearchPlan,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            seed: 42,
            selection_fraction: 0.10,
            gender_mode: GenderMode::Separate,
            clamp_predictions: false,
            families: ModelFamily::ALL.to_vec(),
            grid: GridSearchPlan::default(),
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(CoreError::Config("k must be at least 2".into()));
        }
        if !(self.selection_fraction > 0.0 && self.selection_fraction <= 1.0) {
            return Err(CoreError::Config("selection_fraction must lie in (0, 1]".into()));
        }
        if self.families.is_empty() {
            return Err(CoreError::Config("no model families configured".into()));
        }
        self.grid.validate()
    }
}

/// Metadata rows with their feature rows in the same order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: Vec<SampleMeta>,
    pub features: FeatureMatrix,
    pub source: FeatureSource,
    pub manifest_id: String,
}

impl Dataset {
    /// Reorders `features` to follow `meta`; every metadata row needs a feature row.
    pub fn new(
        meta: Vec<SampleMeta>,
        features: &FeatureMatrix,
        source: FeatureSource,
        manifest_id: impl Into<String>,
    ) -> Result<Self> {
        let ids: Vec<String> = meta.iter().map(|m| m.sample_id.clone()).collect();
        let features = features.align_to(&ids)?;
        if features.values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Data("feature matrix contains non-finite values".into()));
        }
        Ok(Dataset {
            meta,
            features,
            source,
            manifest_id: manifest_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.meta.iter().map(|m| f64::from(m.phq8)).collect()
    }
}

/// Train/test row indices of one outer fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldSplit {
    pub fn from_assignment(sample_folds: &[usize], fold: usize) -> Self {
        let (test, train) = (0..sample_folds.len()).partition(|&i| sample_folds[i] == fold);
        FoldSplit { fold, train, test }
    }

    /// Sample ids and subjects must not cross the train/test boundary.
    pub fn validate(&self, meta: &[SampleMeta]) -> Result<()> {
        let test_ids: BTreeSet<&str> = self.test.iter().map(|&i| meta[i].sample_id.as_str()).collect();
        let test_subjects: BTreeSet<&str> = self.test.iter().map(|&i| meta[i].subject_id.as_str()).collect();
        for &i in &self.train {
            if test_ids.contains(meta[i].sample_id.as_str()) || test_subjects.contains(meta[i].subject_id.as_str()) {
                return Err(CoreError::Leakage(meta[i].sample_id.clone()));
            }
        }
        Ok(())
    }

    pub fn test_ids(&self, meta: &[SampleMeta]) -> BTreeSet<String> {
        self.test.iter().map(|&i| meta[i].sample_id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: ModelFamily,
    pub params: Hyperparams,
    /// Absent when the grid had a single point.
    pub grid: Option<GridResult>,
    pub model: RegressorModel,
}

/// Preprocessing state plus one trained model per family.
#[derive(Debug, Clone)]
pub struct FittedGroup {
    pub standardizer: Standardizer,
    pub selection: SelectionResult,
    pub models: Vec<FittedModel>,
}

impl FittedGroup {
    pub fn transform(&self, raw: ArrayView2<f64>) -> Result<ndarray::Array2<f64>> {
        let z = self.standardizer.transform(&raw.to_owned())?;
        Ok(z.select(Axis(1), &self.selection.indices()))
    }

    pub fn model(&self, family: ModelFamily) -> Option<&FittedModel> {
        self.models.iter().find(|m| m.family == family)
    }
}

/// Fit standardization, selection and every configured family on `rows`.
/// Fails with a leakage error if any row's sample id is in `forbidden`.
pub fn fit_group(
    data: &Dataset,
    rows: &[usize],
    forbidden: &BTreeSet<String>,
    cfg: &CvConfig,
    seed: u64,
    timings: &mut StageTimings,
) -> Result<FittedGroup> {
    if let Some(&r) = rows.iter().find(|&&r| forbidden.contains(&data.meta[r].sample_id)) {
        return Err(CoreError::Leakage(data.meta[r].sample_id.clone()));
    }
    let x = data.features.values.select(Axis(0), rows);
    let y: Vec<f64> = rows.iter().map(|&r| f64::from(data.meta[r].phq8)).collect();
    let groups: Vec<String> = rows.iter().map(|&r| data.meta[r].subject_id.clone()).collect();

    let (pre, secs) = timed(|| -> Result<_> {
        let standardizer = Standardizer::fit(&x, &data.features.names)?;
        let z = standardizer.transform(&x)?;
        let selection = mrmr_select(&z, &data.features.names, &y, cfg.selection_fraction)?;
        let xs = z.select(Axis(1), &selection.indices());
        Ok((standardizer, selection, xs))
    });
    timings.preprocessing_s += secs;
    let (standardizer, selection, xs) = pre?;

    let mut models = Vec::with_capacity(cfg.families.len());
    for &family in &cfg.families {
        let (fitted, secs) = timed(|| -> Result<FittedModel> {
            let points = cfg.grid.points(family);
            let (params, grid) = if points.len() == 1 {
                (points[0].clone(), None)
            } else {
                let g = grid_search(family, xs.view(), &y, &groups, &cfg.grid, seed)?;
                (g.best.clone(), Some(g))
            };
            let model = RegressorModel::fit(&params, xs.view(), &y, seed)?;
            Ok(FittedModel {
                family,
                params,
                grid,
                model,
            })
        });
        timings.add_training(family, secs);
        models.push(fitted?);
    }
    Ok(FittedGroup {
        standardizer,
        selection,
        models,
    })
}

/// One out-of-fold prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub fold: usize,
    /// Which training group's model produced it (`male`, `female`, `all`).
    pub model_group: String,
    pub truth: f64,
    pub prediction: f64,
    pub abs_error: f64,
    pub duration_s: f64,
    pub gender: Gender,
    pub task: Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
}

impl Metrics {
    pub fn of(preds: &[&Prediction]) -> Result<Self> {
        let p: Vec<f64> = preds.iter().map(|p| p.prediction).collect();
        let t: Vec<f64> = preds.iter().map(|p| p.truth).collect();
        Ok(Metrics {
            n: preds.len(),
            rmse: rmse(&p, &t)?,
            mae: mae(&p, &t)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenParams {
    pub fold: usize,
    pub group: String,
    pub params: Hyperparams,
    /// Mean inner-CV RMSE of the chosen point, when a grid was searched.
    pub inner_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub family: ModelFamily,
    pub label: String,
    pub overall: Metrics,
    pub per_fold: Vec<FoldMetrics>,
    pub by_gender: Vec<GroupMetrics>,
    pub by_task: Vec<GroupMetrics>,
    pub ccc_abs_error_vs_duration: f64,
    pub ccc_abs_error_vs_phq8: f64,
    /// Male vs female absolute errors; absent if either group is too small.
    pub gender_error_ttest: Option<TTest>,
    pub chosen: Vec<ChosenParams>,
}

impl ModelReport {
    pub fn gender(&self, g: Gender) -> Option<&Metrics> {
        self.by_gender
            .iter()
            .find(|m| m.group == g.as_str())
            .map(|m| &m.metrics)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_subjects: usize,
    pub bin_histogram: [usize; SEVERITY_BINS],
    /// Selected feature names per training group, in selection order.
    pub selected: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub config_hash: String,
    pub manifest_id: String,
    pub feature_source: FeatureSource,
    pub gender_mode: GenderMode,
    pub k: usize,
    pub seed: u64,
    pub selection_fraction: f64,
    pub n_samples: usize,
    pub n_subjects: usize,
    pub n_features: usize,
    pub label_mean: f64,
    /// Population standard deviation of the labels.
    pub label_std: f64,
    pub folds: Vec<FoldInfo>,
    pub models: Vec<ModelReport>,
}

impl EvaluationReport {
    pub fn model(&self, family: ModelFamily) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.family == family)
    }
}

/// Report plus the outputs kept out of it: per-sample predictions and
/// wall-clock timings (which would break byte-for-byte reproducibility).
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: EvaluationReport,
    pub predictions: BTreeMap<ModelFamily, Vec<Prediction>>,
    pub plan: FoldPlan,
    pub timings: StageTimings,
    pub artifacts: Vec<GroupArtifact>,
}

/// Fitted preprocessing state of one training group, kept for persistence.
#[derive(Debug, Clone)]
pub struct GroupArtifact {
    pub fold: usize,
    pub group: String,
    pub standardizer: Standardizer,
    pub selection: SelectionResult,
}

struct TrainingGroup {
    name: String,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn training_groups(data: &Dataset, split: &FoldSplit, cfg: &CvConfig) -> Vec<TrainingGroup> {
    if cfg.gender_mode == GenderMode::Pooled {
        return vec![TrainingGroup {
            name: "all".into(),
            train: split.train.clone(),
            test: split.test.clone(),
        }];
    }
    // two subjects per inner fold, so uneven stratified folds still leave
    // several subjects in every inner training split
    let min_subjects = 2 * cfg.grid.inner_folds;
    let mut groups = Vec::new();
    let mut pooled_test = Vec::new();
    for g in [Gender::Male, Gender::Female] {
        let test: Vec<usize> = split
            .test
            .iter()
            .copied()
            .filter(|&i| data.meta[i].gender == g)
            .collect();
        if test.is_empty() {
            continue;
        }
        let train: Vec<usize> = split
            .train
            .iter()
            .copied()
            .filter(|&i| data.meta[i].gender == g)
            .collect();
        let subjects: BTreeSet<&str> = train.iter().map(|&i| data.meta[i].subject_id.as_str()).collect();
        if subjects.len() >= min_subjects {
            groups.push(TrainingGroup {
                name: g.as_str().into(),
                train,
                test,
            });
        } else {
            pooled_test.extend(test);
        }
    }
    pooled_test.extend(
        split
            .test
            .iter()
            .copied()
            .filter(|&i| data.meta[i].gender == Gender::Other),
    );
    if !pooled_test.is_empty() {
        pooled_test.sort_unstable();
        groups.push(TrainingGroup {
            name: "all".into(),
            train: split.train.clone(),
            test: pooled_test,
        });
    }
    groups
}

/// Group seeds differ per fold and group so reruns are reproducible but
/// models are not trained on identical random streams.
fn group_seed(base: u64, fold: usize, group: &str) -> u64 {
    let g = match group {
        "male" => 1,
        "female" => 2,
        _ => 3,
    };
    base.wrapping_mul(1_000_003).wrapping_add((fold as u64) * 16 + g)
}

pub fn evaluate_cv(data: &Dataset, cfg: &CvConfig) -> Result<CvOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(CoreError::EmptyInput("no samples to evaluate".into()));
    }
    let plan = make_folds(&data.meta, cfg.k, cfg.seed)?;
    let sample_folds = plan.sample_folds(&data.meta)?;
    let mut timings = StageTimings::default();
    let mut slots: BTreeMap<ModelFamily, Vec<Option<Prediction>>> =
        cfg.families.iter().map(|&f| (f, vec![None; data.len()])).collect();
    let mut chosen: BTreeMap<ModelFamily, Vec<ChosenParams>> = BTreeMap::new();
    let mut folds = Vec::with_capacity(cfg.k);
    let mut artifacts = Vec::new();

    for fold in 0..cfg.k {
        let split = FoldSplit::from_assignment(&sample_folds, fold);
        split.validate(&data.meta)?;
        let forbidden = split.test_ids(&data.meta);
        let mut selected = BTreeMap::new();
        for group in training_groups(data, &split, cfg) {
            let seed = group_seed(cfg.seed, fold, &group.name);
            let fitted = fit_group(data, &group.train, &forbidden, cfg, seed, &mut timings)?;
            selected.insert(group.name.clone(), fitted.selection.names());
            artifacts.push(GroupArtifact {
                fold,
                group: group.name.clone(),
                standardizer: fitted.standardizer.clone(),
                selection: fitted.selection.clone(),
            });
            let xt = data.features.values.select(Axis(0), &group.test);
            for fm in &fitted.models {
                let (pred, secs) = timed(|| -> Result<Vec<f64>> {
                    let z = fitted.transform(xt.view())?;
                    fm.model.predict(z.view())
                });
                timings.add_prediction(fm.family, secs);
                let pred = pred?;
                for (&row, &p) in group.test.iter().zip(&pred) {
                    if !p.is_finite() {
                        return Err(CoreError::Data(format!(
                            "non-finite prediction for {}",
                            data.meta[row].sample_id
                        )));
                    }
                    let p = if cfg.clamp_predictions { p.clamp(0.0, 24.0) } else { p };
                    let m = &data.meta[row];
                    let slot = &mut slots.get_mut(&fm.family).expect("configured family")[row];
                    if slot.is_some() {
                        return Err(CoreError::Fold(format!("{} predicted twice", m.sample_id)));
                    }
                    let truth = f64::from(m.phq8);
                    *slot = Some(Prediction {
                        sample_id: m.sample_id.clone(),
                        fold,
                        model_group: group.name.clone(),
                        truth,
                        prediction: p,
                        abs_error: (p - truth).abs(),
                        duration_s: m.duration_s,
                        gender: m.gender,
                        task: m.task,
                    });
                }
                chosen.entry(fm.family).or_default().push(ChosenParams {
                    fold,
                    group: group.name.clone(),
                    params: fm.params.clone(),
                    inner_rmse: fm.grid.as_ref().map(|g| g.table[g.best_index].mean_rmse),
                });
            }
        }
        let test_subjects: BTreeSet<&str> = split.test.iter().map(|&i| data.meta[i].subject_id.as_str()).collect();
        folds.push(FoldInfo {
            fold,
            n_train: split.train.len(),
            n_test: split.test.len(),
            test_subjects: test_subjects.len(),
            bin_histogram: plan.bin_histogram[fold],
            selected,
        });
    }

    let mut predictions = BTreeMap::new();
    let mut models = Vec::new();
    for &family in &cfg.families {
        let preds: Vec<Prediction> = slots
            .remove(&family)
            .expect("configured family")
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| CoreError::Fold(format!("{} was never predicted", data.meta[i].sample_id))))
            .collect::<Result<_>>()?;
        models.push(model_report(
            family,
            &preds,
            cfg.k,
            chosen.remove(&family).unwrap_or_default(),
        )?);
        predictions.insert(family, preds);
    }

    let labels = data.labels();
    let subjects: BTreeSet<&str> = data.meta.iter().map(|m| m.subject_id.as_str()).collect();
    let report = EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        config_hash: String::new(),
        manifest_id: data.manifest_id.clone(),
        feature_source: data.source,
        gender_mode: cfg.gender_mode,
        k: cfg.k,
        seed: cfg.seed,
        selection_fraction: cfg.selection_fraction,
        n_samples: data.len(),
        n_subjects: subjects.len(),
        n_features: data.features.ncols(),
        label_mean: mean(&labels),
        label_std: variance(&labels).sqrt(),
        folds,
        models,
    };
    Ok(CvOutcome {
        report,
        predictions,
        plan,
        timings,
        artifacts,
    })
}

fn model_report(family: ModelFamily, preds: &[Prediction], k: usize, chosen: Vec<ChosenParams>) -> Result<ModelReport> {
    let all: Vec<&Prediction> = preds.iter().collect();
    let overall = Metrics::of(&all)?;
    let per_fold = (0..k)
        .map(|f| {
            let sel: Vec<&Prediction> = preds.iter().filter(|p| p.fold == f).collect();
            Ok(FoldMetrics {
                fold: f,
                metrics: Metrics::of(&sel)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut by_gender = Vec::new();
    for g in [Gender::Male, Gender::Female, Gender::Other] {
        let sel: Vec<&Prediction> = preds.iter().filter(|p| p.gender == g).collect();
        if !sel.is_empty() {
            by_gender.push(GroupMetrics {
                group: g.as_str().into(),
                metrics: Metrics::of(&sel)?,
            });
        }
    }
    let mut by_task = Vec::new();
    for t in Task::ALL {
        let sel: Vec<&Prediction> = preds.iter().filter(|p| p.task == t).collect();
        if !sel.is_empty() {
            by_task.push(GroupMetrics {
                group: t.as_str().into(),
                metrics: Metrics::of(&sel)?,
            });
        }
    }
    let err: Vec<f64> = preds.iter().map(|p| p.abs_error).collect();
    let dur: Vec<f64> = preds.iter().map(|p| p.duration_s).collect();
    let phq: Vec<f64> = preds.iter().map(|p| p.truth).collect();
    let pair_ccc = |a: &[f64], b: &[f64]| if a.len() >= 2 { ccc(a, b) } else { Ok(0.0) };
    let errs_of = |g: Gender| -> Vec<f64> { preds.iter().filter(|p| p.gender == g).map(|p| p.abs_error).collect() };
    let gender_error_ttest = ttest_two_sample(&errs_of(Gender::Male), &errs_of(Gender::Female)).ok();
    Ok(ModelReport {
        family,
        label: family.label().into(),
        overall,
        per_fold,
        by_gender,
        by_task,
        ccc_abs_error_vs_duration: pair_ccc(&err, &dur)?,
        ccc_abs_error_vs_phq8: pair_ccc(&err, &phq)?,
        gender_error_ttest,
        chosen,
    })
}
