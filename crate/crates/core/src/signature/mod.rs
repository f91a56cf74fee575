//! Expression-based weak labeling: GMT gene-set parsing, per-sample
//! signature scores from across-sample z-scores, and hypoxic/normoxic
//! stratification.

mod expr;
mod gmt;
mod score;

pub use expr::ExpressionMatrix;
pub use gmt::{parse_gmt, GeneSet};
pub use score::{signature_scores, stratify, SampleLabel, SampleScore, StratifyMode, TissueClass};
