//! Algorithm descriptions, fitted models of any kind, and the JSON model
//! document.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::tune::{tune_mlp, DnnGrid};
use crate::data::{Dataset, Matrix, Probabilities};
use crate::ensembles::{
    fit_cascade, fit_superlearner, presets, CascadeSpec, FittedCascade, FittedSuperlearner, SuperlearnerSpec,
};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::learners::{self, FittedLearner, LearnerSpec, MlpSpec};
use crate::rng::{derive_seed, SeededRng};

pub const MODEL_FORMAT: &str = "stackbench-model";
pub const MODEL_VERSION: u32 = 1;

const TUNE_KEY: u64 = 0x7075_6E65;

/// Anything `fit_algorithm` can train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    Learner { spec: LearnerSpec },
    Superlearner { spec: SuperlearnerSpec },
    Cascade { spec: CascadeSpec },
    /// An MLP whose SGD settings are grid-searched on the training data.
    TunedMlp { base: MlpSpec, grid: DnnGrid },
}

pub const PRESET_NAMES: [&str; 8] = [
    "superlearner",
    "fast-superlearner",
    "mixed-deep",
    "deep-knn",
    "knn-superlearner",
    "knn5",
    "dnn-mirror",
    "dnn-tuned",
];

impl AlgorithmSpec {
    pub fn learner(spec: LearnerSpec) -> Self {
        AlgorithmSpec::Learner { spec }
    }

    /// Resolves a preset name. `dnn-tuned` yields the grid-tuned variant.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "superlearner" => AlgorithmSpec::Superlearner { spec: presets::preset_superlearner() },
            "fast-superlearner" => AlgorithmSpec::Superlearner { spec: presets::preset_fast_superlearner() },
            "mixed-deep" => AlgorithmSpec::Cascade { spec: presets::preset_mixed_deep() },
            "deep-knn" => AlgorithmSpec::Cascade { spec: presets::preset_deep_knn() },
            "knn-superlearner" => AlgorithmSpec::Superlearner { spec: presets::preset_knn_superlearner() },
            "knn5" => AlgorithmSpec::learner(LearnerSpec::knn(5)),
            "dnn-mirror" => AlgorithmSpec::learner(presets::preset_dnn_mirror()),
            "dnn-tuned" => match presets::preset_dnn_tuned() {
                LearnerSpec::Mlp(base) => AlgorithmSpec::TunedMlp { base, grid: DnnGrid::default() },
                _ => unreachable!("preset_dnn_tuned is an MLP"),
            },
            other => {
                return Err(Error::invalid(format!(
                    "unknown algorithm '{other}'; expected one of {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmSpec::Learner { spec } => spec.validate(),
            AlgorithmSpec::Superlearner { spec } => spec.validate(),
            AlgorithmSpec::Cascade { spec } => spec.validate(),
            AlgorithmSpec::TunedMlp { base, grid } => {
                grid.validate()?;
                LearnerSpec::Mlp(base.clone()).validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Learner(FittedLearner),
    Superlearner(FittedSuperlearner),
    Cascade(FittedCascade),
}

impl FittedModel {
    pub fn n_features(&self) -> usize {
        match self {
            FittedModel::Learner(m) => m.n_features,
            FittedModel::Superlearner(m) => m.n_features,
            FittedModel::Cascade(m) => m.n_features,
        }
    }

    pub fn predict(&self, features: &Matrix) -> Result<Probabilities> {
        match self {
            FittedModel::Learner(m) => m.predict(features),
            FittedModel::Superlearner(m) => m.predict(features),
            FittedModel::Cascade(m) => m.predict(features),
        }
    }
}

/// Trains `spec`; the returned seconds cover the whole fit, tuning included.
pub fn fit_algorithm(spec: &AlgorithmSpec, data: &Dataset, rng: &SeededRng) -> Result<(FittedModel, f64)> {
    spec.validate()?;
    let start = Instant::now();
    let model = match spec {
        AlgorithmSpec::Learner { spec } => FittedModel::Learner(learners::fit(spec, data, rng)?),
        AlgorithmSpec::Superlearner { spec } => FittedModel::Superlearner(fit_superlearner(spec, data, rng)?),
        AlgorithmSpec::Cascade { spec } => FittedModel::Cascade(fit_cascade(spec, data, rng)?),
        AlgorithmSpec::TunedMlp { base, grid } => {
            let tune_rng = SeededRng::new(derive_seed(rng.master_seed(), &[TUNE_KEY]));
            let best = tune_mlp(&grid.specs(base), data, &tune_rng)?.best;
            FittedModel::Learner(learners::fit(&LearnerSpec::Mlp(best), data, rng)?)
        }
    };
    Ok((model, start.elapsed().as_secs_f64()))
}

/// Versioned, self-describing persisted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub algorithm: AlgorithmSpec,
    pub model: FittedModel,
}

impl ModelDocument {
    pub fn new(seed: u64, feature_names: Vec<String>, algorithm: AlgorithmSpec, model: FittedModel) -> Self {
        ModelDocument { format: MODEL_FORMAT.to_string(), version: MODEL_VERSION, seed, feature_names, algorithm, model }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Document(format!("not a model document (format '{}')", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Document(format!("unsupported model version {} (expected {MODEL_VERSION})", doc.version)));
        }
        if doc.feature_names.len() != doc.model.n_features() {
            return Err(Error::Document("feature name count does not match the model".into()));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
