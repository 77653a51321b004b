//! Named architectures from the benchmark design.

use super::cascade::{CascadeMember, CascadeSpec, LayerFeatures};
use super::superlearner::{MetaLearner, SuperlearnerSpec};
use crate::learners::{LearnerSpec, MlpSpec};

pub const DEFAULT_FOLDS: usize = 10;
pub const MIXED_DEEP_FRACTIONS: (f64, f64) = (0.5, 0.8);
pub const DEEP_KNN_FRACTION: f64 = 0.632;
pub const KNN_SUPERLEARNER_KS: [usize; 4] = [2, 5, 10, 25];

/// Random forest, random ferns, KNN (k=5, kd-tree), MARS, conditional
/// inference tree and tree-based boosting, in that order.
pub fn preset_superlearner() -> SuperlearnerSpec {
    SuperlearnerSpec {
        base_specs: vec![
            LearnerSpec::random_forest(),
            LearnerSpec::random_ferns(),
            LearnerSpec::knn(5),
            LearnerSpec::mars(),
            LearnerSpec::ci_tree(),
            LearnerSpec::boost(),
        ],
        folds: DEFAULT_FOLDS,
        meta: MetaLearner::Nnls,
    }
}

/// MARS plus a conditional inference tree.
pub fn preset_fast_superlearner() -> SuperlearnerSpec {
    SuperlearnerSpec {
        base_specs: vec![LearnerSpec::mars(), LearnerSpec::ci_tree()],
        folds: DEFAULT_FOLDS,
        meta: MetaLearner::Nnls,
    }
}

/// Three layers: two forests with different subsample fractions, a
/// conditional inference tree and ferns; then MARS and another conditional
/// inference tree; then boosting.
pub fn preset_mixed_deep() -> CascadeSpec {
    let (f1, f2) = MIXED_DEEP_FRACTIONS;
    CascadeSpec {
        layers: vec![
            vec![
                CascadeMember::new(LearnerSpec::random_forest_with_fraction(f1), 1.0),
                CascadeMember::new(LearnerSpec::random_forest_with_fraction(f2), 1.0),
                CascadeMember::new(LearnerSpec::ci_tree(), 1.0),
                CascadeMember::new(LearnerSpec::random_ferns(), 1.0),
            ],
            vec![CascadeMember::new(LearnerSpec::mars(), 1.0), CascadeMember::new(LearnerSpec::ci_tree(), 1.0)],
            vec![CascadeMember::new(LearnerSpec::boost(), 1.0)],
        ],
        passthrough: true,
        layer_features: LayerFeatures::InSample,
    }
}

/// 10-10-5 layers of KNN(k=5), each member on its own subsample.
pub fn preset_deep_knn() -> CascadeSpec {
    let layer = |width: usize| vec![CascadeMember::new(LearnerSpec::knn(5), DEEP_KNN_FRACTION); width];
    CascadeSpec { layers: vec![layer(10), layer(10), layer(5)], passthrough: true, layer_features: LayerFeatures::InSample }
}

pub fn preset_knn_superlearner() -> SuperlearnerSpec {
    SuperlearnerSpec {
        base_specs: KNN_SUPERLEARNER_KS.iter().map(|&k| LearnerSpec::knn(k)).collect(),
        folds: DEFAULT_FOLDS,
        meta: MetaLearner::Nnls,
    }
}

/// Hidden layers 4-2-1, mirroring the mixed deep model's widths.
pub fn preset_dnn_mirror() -> LearnerSpec {
    LearnerSpec::Mlp(MlpSpec::with_hidden(vec![4, 2, 1]))
}

/// Hidden layers 13-5-3-1; the benchmark grid-tunes its SGD knobs.
pub fn preset_dnn_tuned() -> LearnerSpec {
    LearnerSpec::Mlp(MlpSpec::with_hidden(vec![13, 5, 3, 1]))
}
