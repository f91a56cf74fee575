//! Weakly supervised histomorphology pipeline: tile extraction from slide
//! images, expression-based weak labeling, an attention-pooled multiple
//! instance learning classifier with its own autodiff engine, and the
//! downstream texture, shape, and rank-statistics analyses.

pub mod autograd;
pub mod error;
pub mod mil;
pub mod shape;
pub mod signature;
pub mod slide;
pub mod stats;
pub mod texture;

pub use error::{Error, Result};
