//! Evaluation statistics: stratified random splits, rank-based ROC AUC,
//! confusion matrices, the two-sided Mann-Whitney U test with significance
//! stars, and boxplot summaries.

mod mwu;
mod rank;
mod splits;
mod summary;

pub use mwu::{
    mann_whitney, mann_whitney_approx, mann_whitney_exact, PvalueMethod, StarLabel, TestResult,
};
pub use rank::{confusion, midranks, roc_auc, ConfusionMatrix};
pub use splits::{make_splits, SplitPlan};
pub use summary::{boxplot_summary, BoxplotSummary};
