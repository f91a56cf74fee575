//! Dense tensors and a minimal reverse-mode autodiff engine covering the
//! operations the MIL network needs, plus a finite-difference check harness.

mod check;
mod graph;
mod store;
mod tensor;

pub use check::{
    gradient_check, params_from_store, GradCheckConfig, GradCheckReport, ParamDeviation,
};
pub use graph::{softmax_in_place, Graph, NodeId, CE_CLAMP_MIN};
pub use store::ParamStore;
pub use tensor::{Scalar, Tensor};
