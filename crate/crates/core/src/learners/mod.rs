//! The base-learner families. Every family follows the same contract:
//! `fit(spec, data, rng)` returns an immutable [`FittedLearner`] whose
//! `predict` yields one probability of class 1 per row.

pub mod boost;
pub mod citree;
pub mod ferns;
pub mod forest;
pub mod kdtree;
pub mod knn;
pub mod mars;
pub mod mlp;
pub mod tree;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, Probabilities};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnBackend {
    Kdtree,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoostBase {
    Tree { max_depth: usize },
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Optional pre-fit subsample of the training rows.
    #[serde(default)]
    pub bootstrap_fraction: Option<f64>,
}

impl MlpSpec {
    pub fn with_hidden(hidden_sizes: Vec<usize>) -> Self {
        MlpSpec { hidden_sizes, learning_rate: 0.1, momentum: 0.9, epochs: 100, batch_size: 32, bootstrap_fraction: None }
    }

    fn sgd(&self) -> mlp::SgdParams {
        mlp::SgdParams {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }
}

/// One base-learner family with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerSpec {
    Knn {
        k: usize,
        backend: KnnBackend,
    },
    RandomForest {
        n_trees: usize,
        /// `None` means `ceil(sqrt(p))`.
        mtry: Option<usize>,
        bootstrap_fraction: f64,
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    RandomFerns {
        n_ferns: usize,
        fern_depth: usize,
    },
    CiTree {
        alpha: f64,
        n_permutations: usize,
        min_node: usize,
    },
    Mars {
        max_terms: usize,
        max_degree: usize,
        gcv_penalty: f64,
    },
    Boost {
        n_rounds: usize,
        shrinkage: f64,
        base: BoostBase,
    },
    Mlp(MlpSpec),
}

/// Largest fern depth accepted (table size `2^depth`).
pub const MAX_FERN_DEPTH: usize = 20;

impl LearnerSpec {
    pub fn knn(k: usize) -> Self {
        LearnerSpec::Knn { k, backend: KnnBackend::Kdtree }
    }

    pub fn random_forest() -> Self {
        LearnerSpec::RandomForest { n_trees: 500, mtry: None, bootstrap_fraction: 0.632, max_depth: None, min_leaf: 5 }
    }

    pub fn random_forest_with_fraction(bootstrap_fraction: f64) -> Self {
        match LearnerSpec::random_forest() {
            LearnerSpec::RandomForest { n_trees, mtry, max_depth, min_leaf, .. } => {
                LearnerSpec::RandomForest { n_trees, mtry, bootstrap_fraction, max_depth, min_leaf }
            }
            _ => unreachable!(),
        }
    }

    pub fn random_ferns() -> Self {
        LearnerSpec::RandomFerns { n_ferns: 50, fern_depth: 8 }
    }

    pub fn ci_tree() -> Self {
        LearnerSpec::CiTree { alpha: 0.05, n_permutations: 499, min_node: 20 }
    }

    pub fn mars() -> Self {
        LearnerSpec::Mars { max_terms: 21, max_degree: 2, gcv_penalty: 3.0 }
    }

    pub fn boost() -> Self {
        LearnerSpec::Boost { n_rounds: 100, shrinkage: 0.1, base: BoostBase::Tree { max_depth: 3 } }
    }

    pub fn mlp(hidden_sizes: Vec<usize>) -> Self {
        LearnerSpec::Mlp(MlpSpec::with_hidden(hidden_sizes))
    }

    pub fn family(&self) -> &'static str {
        match self {
            LearnerSpec::Knn { .. } => "knn",
            LearnerSpec::RandomForest { .. } => "random_forest",
            LearnerSpec::RandomFerns { .. } => "random_ferns",
            LearnerSpec::CiTree { .. } => "ci_tree",
            LearnerSpec::Mars { .. } => "mars",
            LearnerSpec::Boost { .. } => "boost",
            LearnerSpec::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family();
        let fraction_ok = |f: f64| f > 0.0 && f <= 1.0;
        match self {
            LearnerSpec::Knn { k, .. } => {
                if *k == 0 {
                    return Err(Error::spec(fam, "k must be at least 1"));
                }
            }
            LearnerSpec::RandomForest { n_trees, mtry, bootstrap_fraction, max_depth, min_leaf } => {
                if *n_trees == 0 {
                    return Err(Error::spec(fam, "n_trees must be at least 1"));
                }
                if *mtry == Some(0) {
                    return Err(Error::spec(fam, "mtry must be at least 1"));
                }
                if !fraction_ok(*bootstrap_fraction) {
                    return Err(Error::spec(fam, format!("bootstrap_fraction {bootstrap_fraction} not in (0,1]")));
                }
                if *max_depth == Some(0) || *min_leaf == 0 {
                    return Err(Error::spec(fam, "max_depth and min_leaf must be at least 1"));
                }
            }
            LearnerSpec::RandomFerns { n_ferns, fern_depth } => {
                if *n_ferns == 0 || *fern_depth == 0 || *fern_depth > MAX_FERN_DEPTH {
                    return Err(Error::spec(fam, format!("need n_ferns >= 1 and 1 <= fern_depth <= {MAX_FERN_DEPTH}")));
                }
            }
            LearnerSpec::CiTree { alpha, n_permutations, min_node } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::spec(fam, format!("alpha {alpha} not in (0,1)")));
                }
                if *n_permutations == 0 || *min_node < 2 {
                    return Err(Error::spec(fam, "need n_permutations >= 1 and min_node >= 2"));
                }
            }
            LearnerSpec::Mars { max_terms, max_degree, gcv_penalty } => {
                if *max_terms == 0 || *max_degree == 0 || !(*gcv_penalty >= 0.0) {
                    return Err(Error::spec(fam, "need max_terms >= 1, max_degree >= 1, gcv_penalty >= 0"));
                }
            }
            LearnerSpec::Boost { shrinkage, base, .. } => {
                if !fraction_ok(*shrinkage) {
                    return Err(Error::spec(fam, format!("shrinkage {shrinkage} not in (0,1]")));
                }
                if let BoostBase::Tree { max_depth: 0 } = base {
                    return Err(Error::spec(fam, "tree base needs max_depth >= 1"));
                }
            }
            LearnerSpec::Mlp(s) => {
                if s.hidden_sizes.is_empty() || s.hidden_sizes.contains(&0) {
                    return Err(Error::spec(fam, "hidden_sizes must be non-empty and positive"));
                }
                if !(s.learning_rate > 0.0) || s.epochs == 0 || s.batch_size == 0 {
                    return Err(Error::spec(fam, "learning_rate, epochs and batch_size must be positive"));
                }
                if !(s.momentum >= 0.0 && s.momentum < 1.0) {
                    return Err(Error::spec(fam, format!("momentum {} not in [0,1)", s.momentum)));
                }
                if s.bootstrap_fraction.is_some_and(|f| !fraction_ok(f)) {
                    return Err(Error::spec(fam, "bootstrap_fraction not in (0,1]"));
                }
            }
        }
        Ok(())
    }

    fn needs_both_classes(&self) -> bool {
        matches!(self, LearnerSpec::Boost { .. } | LearnerSpec::Mlp(_))
    }

    /// Stable 64-bit key of the canonical JSON form; equal specs share keys.
    pub fn stable_key(&self) -> u64 {
        let doc = serde_json::to_vec(self).expect("learner specs serialize");
        crate::rng::stable_hash(&doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum LearnerModel {
    Knn(knn::KnnModel),
    RandomForest(forest::ForestModel),
    RandomFerns(ferns::FernsModel),
    CiTree(citree::CiTreeModel),
    Mars(mars::MarsModel),
    Boost(boost::BoostModel),
    Mlp(mlp::MlpModel),
}

/// A trained base learner with its training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLearner {
    pub spec: LearnerSpec,
    pub seed: u64,
    pub n_features: usize,
    /// Wall-clock fit time; not persisted, so saved models are reproducible.
    #[serde(skip, default)]
    pub fit_seconds: f64,
    pub model: LearnerModel,
}

fn check_data(spec: &LearnerSpec, data: &Dataset) -> Result<()> {
    let fam = spec.family();
    if data.is_empty() || data.n_features() == 0 {
        return Err(Error::fit(fam, "empty training data"));
    }
    if !data.features().all_finite() {
        return Err(Error::fit(fam, "non-finite feature values"));
    }
    if spec.needs_both_classes() && !data.has_both_classes() {
        return Err(Error::fit(fam, "training labels hold a single class"));
    }
    if let LearnerSpec::Knn { k, .. } = spec {
        if *k > data.n_rows() {
            return Err(Error::fit(fam, format!("k = {k} exceeds {} training rows", data.n_rows())));
        }
    }
    Ok(())
}

/// Trains one base learner; deterministic for fixed `(spec, data, rng seed)`.
pub fn fit(spec: &LearnerSpec, data: &Dataset, rng: &SeededRng) -> Result<FittedLearner> {
    spec.validate()?;
    check_data(spec, data)?;
    let start = Instant::now();
    let mut stream = rng.clone();
    let p = data.n_features();
    let model = match spec {
        LearnerSpec::Knn { k, backend } => LearnerModel::Knn(knn::fit(data, *k, *backend)),
        LearnerSpec::RandomForest { n_trees, mtry, bootstrap_fraction, max_depth, min_leaf } => {
            let params = forest::ForestParams {
                n_trees: *n_trees,
                mtry: mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).min(p),
                bootstrap_fraction: *bootstrap_fraction,
                max_depth: *max_depth,
                min_leaf: *min_leaf,
            };
            LearnerModel::RandomForest(forest::fit(data, params, rng))
        }
        LearnerSpec::RandomFerns { n_ferns, fern_depth } => {
            LearnerModel::RandomFerns(ferns::fit(data, *n_ferns, *fern_depth, rng))
        }
        LearnerSpec::CiTree { alpha, n_permutations, min_node } => {
            let params = citree::CiTreeParams { alpha: *alpha, n_permutations: *n_permutations, min_node: *min_node };
            LearnerModel::CiTree(citree::fit(data, params, &mut stream))
        }
        LearnerSpec::Mars { max_terms, max_degree, gcv_penalty } => LearnerModel::Mars(mars::fit(
            data,
            mars::MarsParams { max_terms: *max_terms, max_degree: *max_degree, gcv_penalty: *gcv_penalty },
        )),
        LearnerSpec::Boost { n_rounds, shrinkage, base } => {
            LearnerModel::Boost(boost::fit(data, *n_rounds, *shrinkage, *base, &mut stream))
        }
        LearnerSpec::Mlp(s) => {
            LearnerModel::Mlp(mlp::fit(data, &s.hidden_sizes, s.sgd(), s.bootstrap_fraction, &mut stream))
        }
    };
    Ok(FittedLearner {
        spec: spec.clone(),
        seed: rng.master_seed(),
        n_features: p,
        fit_seconds: start.elapsed().as_secs_f64(),
        model,
    })
}

impl FittedLearner {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        Ok(match &self.model {
            LearnerModel::Knn(m) => m.predict_row(row)?,
            LearnerModel::RandomForest(m) => m.predict_row(row),
            LearnerModel::RandomFerns(m) => m.predict_row(row)?,
            LearnerModel::CiTree(m) => m.predict_row(row),
            LearnerModel::Mars(m) => m.predict_row(row),
            LearnerModel::Boost(m) => m.predict_row(row),
            LearnerModel::Mlp(m) => m.predict_row(row),
        })
    }

    pub fn predict(&self, features: &Matrix) -> Result<Probabilities> {
        if features.cols() != self.n_features {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.n_features,
                features.cols()
            )));
        }
        let rows: Vec<&[f64]> = features.row_iter().collect();
        let values = rows.par_iter().map(|r| self.predict_row(r)).collect::<Result<Vec<f64>>>()?;
        Probabilities::new(values)
    }
}
