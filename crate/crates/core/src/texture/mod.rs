//! Gray-level co-occurrence texture features: grayscale conversion, GLCM
//! construction at distance 1 over four angles, and the per-angle feature
//! set averaged over angles.

mod glcm;
mod gray;

pub use glcm::{
    features_of_matrix, glcm, glcm_features, Angle, GlcmFeatures, GlcmMatrix, GRAY_LEVELS,
};
pub use gray::{to_gray, GrayTile};
