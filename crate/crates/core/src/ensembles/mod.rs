//! Composite architectures: cross-validated superlearners and deep cascades.

pub mod cascade;
pub mod nnls;
pub mod presets;
pub mod superlearner;

pub use cascade::{fit_cascade, CascadeMember, CascadeSpec, FittedCascade, LayerFeatures};
pub use nnls::{nnls_solve, MetaWeights};
pub use presets::*;
pub use superlearner::{
    fit_superlearner, fit_superlearner_detailed, FittedSuperlearner, MetaLearner, SuperlearnerFit, SuperlearnerSpec,
};
