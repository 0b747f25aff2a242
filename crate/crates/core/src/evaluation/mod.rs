//! Cross-validation protocol, metrics, statistical tests and cost accounting.

mod cv;
pub mod folds;
pub mod meta;
pub mod metrics;
mod report;
pub mod stats;
pub mod timing;

pub use cv::{
    evaluate_cv, fit_group, ChosenParams, CvConfig, CvOutcome, Dataset, EvaluationReport, FeatureSource, FittedGroup,
    FittedModel, FoldInfo, FoldMetrics, FoldSplit, GenderMode, GroupArtifact, GroupMetrics, Metrics, ModelReport,
    Prediction, REPORT_FORMAT_VERSION,
};
pub use folds::{make_folds, severity_bin, FoldPlan};
pub use meta::{load_metadata, parse_metadata, Gender, SampleMeta, Task};
pub use metrics::{ccc, mae, pearson, rmse};
pub use report::{
    parse_report, predictions_csv, render_markdown, report_json, CostColumn, CostReport, COST_ROWS, PREDICTION_HEADER,
};
pub use stats::{
    bonferroni, feature_shift_tests, ttest_two_sample, wilcoxon_signed_rank, ShiftSummary, TTest, Wilcoxon,
};
pub use timing::StageTimings;
