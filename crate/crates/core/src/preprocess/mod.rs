//! Training-fold standardization and mRMR feature selection.

mod mrmr;
mod standardize;

pub use mrmr::{mrmr_select, pearson, selection_size, SelectionResult, SelectionStep};
pub use standardize::Standardizer;
