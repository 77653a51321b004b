//! Cross-validated stacking.
//!
//! Each base learner is fitted V times on stratified folds to build the
//! out-of-fold prediction matrix `Z`; the meta-learner is fitted on `(Z, y)`;
//! every base learner is then refitted on the full training data.
//!
//! Member seeds are keyed by the member's spec rather than its position, so
//! reordering `base_specs` only reorders the weights and identical specs
//! produce identical columns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nnls::{self, MetaWeights};
use crate::data::{Dataset, Matrix, Probabilities};
use crate::error::{Error, Result};
use crate::learners::boost::sigmoid;
use crate::learners::{self, FittedLearner, LearnerSpec};
use crate::rng::{derive_seed, SeededRng};
use crate::split::stratified_folds;

const FOLD_KEY: u64 = 0xF01D;
const FULL_FIT: u64 = u64::MAX;
const FOLD_ATTEMPTS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaLearner {
    Nnls,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlearnerSpec {
    pub base_specs: Vec<LearnerSpec>,
    pub folds: usize,
    pub meta: MetaLearner,
}

impl SuperlearnerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_specs.is_empty() {
            return Err(Error::spec("superlearner", "no base learners"));
        }
        if self.folds < 2 {
            return Err(Error::spec("superlearner", "folds must be at least 2"));
        }
        self.base_specs.iter().try_for_each(LearnerSpec::validate)
    }
}

/// Logistic regression of `y` on the base predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticMeta {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LogisticMeta {
    pub const RIDGE: f64 = 1e-6;

    /// Newton-Raphson on the ridge-penalized log-likelihood.
    pub fn fit(z: &Matrix, y: &[f64]) -> LogisticMeta {
        use nalgebra::{DMatrix, DVector};
        let (n, l) = (z.rows(), z.cols());
        let d = l + 1;
        let mut beta = DVector::<f64>::zeros(d);
        for _ in 0..50 {
            let mut h = DMatrix::<f64>::identity(d, d) * (Self::RIDGE * n as f64);
            h[(0, 0)] = 1e-12;
            let mut g = DVector::<f64>::zeros(d);
            for j in 1..d {
                g[j] = Self::RIDGE * n as f64 * beta[j];
            }
            for (row, &t) in z.row_iter().zip(y) {
                let eta = beta[0] + (0..l).map(|j| beta[j + 1] * row[j]).sum::<f64>();
                let p = sigmoid(eta);
                let wgt = (p * (1.0 - p)).max(1e-12);
                let xi: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
                for a in 0..d {
                    g[a] += (p - t) * xi[a];
                    for b in 0..d {
                        h[(a, b)] += wgt * xi[a] * xi[b];
                    }
                }
            }
            let Some(step) = h.lu().solve(&g) else { break };
            beta -= &step;
            if step.amax() < 1e-10 {
                break;
            }
        }
        LogisticMeta { intercept: beta[0], coefficients: beta.iter().skip(1).copied().collect() }
    }

    pub fn combine(&self, predictions: &[f64]) -> f64 {
        sigmoid(self.intercept + self.coefficients.iter().zip(predictions).map(|(c, p)| c * p).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Combination {
    Weights(MetaWeights),
    Logistic(LogisticMeta),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSuperlearner {
    pub spec: SuperlearnerSpec,
    pub combination: Combination,
    pub learners: Vec<FittedLearner>,
    /// Mean squared error of each column of the out-of-fold matrix.
    pub cv_risk: Vec<f64>,
    pub seed: u64,
    pub n_features: usize,
}

/// A fitted superlearner together with the out-of-fold matrix it was built on.
#[derive(Debug, Clone)]
pub struct SuperlearnerFit {
    pub model: FittedSuperlearner,
    pub out_of_fold: Matrix,
}

/// Seed of one member fit: `fold = None` is the full-data refit.
pub fn member_seed(master: u64, fold: Option<usize>, spec: &LearnerSpec) -> u64 {
    let fold_key = fold.map_or(FULL_FIT, |f| f as u64);
    derive_seed(master, &[fold_key, spec.stable_key()])
}

fn assign_folds(data: &Dataset, folds: usize, rng: &SeededRng) -> Result<Vec<usize>> {
    if folds > data.n_rows() {
        return Err(Error::fit("superlearner", format!("{folds} folds for {} rows", data.n_rows())));
    }
    for attempt in 0..FOLD_ATTEMPTS {
        let assignment = stratified_folds(data.labels(), folds, &mut rng.child(&[FOLD_KEY, attempt]))?;
        let ok = (0..folds).all(|v| {
            let mut classes = [false; 2];
            for (&f, &y) in assignment.iter().zip(data.labels()) {
                if f != v {
                    classes[usize::from(y)] = true;
                }
            }
            classes[0] && classes[1] && assignment.contains(&v)
        });
        if ok {
            return Ok(assignment);
        }
    }
    Err(Error::fit("superlearner", "a training fold lacks one class after stratification retries"))
}

pub fn fit_superlearner_detailed(spec: &SuperlearnerSpec, data: &Dataset, rng: &SeededRng) -> Result<SuperlearnerFit> {
    spec.validate()?;
    if !data.has_both_classes() {
        return Err(Error::fit("superlearner", "training labels hold a single class"));
    }
    let master = rng.master_seed();
    let assignment = assign_folds(data, spec.folds, rng)?;
    let n = data.n_rows();
    let l = spec.base_specs.len();

    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..spec.folds)
        .map(|v| (0..n).partition(|&i| assignment[i] != v))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..spec.folds).flat_map(|v| (0..l).map(move |j| (v, j))).collect();
    let fold_preds = jobs
        .par_iter()
        .map(|&(v, j)| {
            let (train, valid) = &folds[v];
            let s = &spec.base_specs[j];
            let model = learners::fit(s, &data.subset(train), &SeededRng::new(member_seed(master, Some(v), s)))?;
            model.predict(&data.features().select_rows(valid))
        })
        .collect::<Result<Vec<Probabilities>>>()?;

    let mut z = Matrix::zeros(n, l);
    for (&(v, j), preds) in jobs.iter().zip(&fold_preds) {
        for (&i, &p) in folds[v].1.iter().zip(preds.values()) {
            z.set(i, j, p);
        }
    }
    let y = data.targets();
    let cv_risk = (0..l)
        .map(|j| (0..n).map(|i| (y[i] - z.get(i, j)).powi(2)).sum::<f64>() / n as f64)
        .collect();
    let combination = match spec.meta {
        MetaLearner::Nnls => Combination::Weights(nnls::nnls_solve(&z, &y)?),
        MetaLearner::Logistic => Combination::Logistic(LogisticMeta::fit(&z, &y)),
    };
    let learners = spec
        .base_specs
        .par_iter()
        .map(|s| learners::fit(s, data, &SeededRng::new(member_seed(master, None, s))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuperlearnerFit {
        model: FittedSuperlearner {
            spec: spec.clone(),
            combination,
            learners,
            cv_risk,
            seed: master,
            n_features: data.n_features(),
        },
        out_of_fold: z,
    })
}

pub fn fit_superlearner(spec: &SuperlearnerSpec, data: &Dataset, rng: &SeededRng) -> Result<FittedSuperlearner> {
    fit_superlearner_detailed(spec, data, rng).map(|f| f.model)
}

impl FittedSuperlearner {
    pub fn weights(&self) -> Option<&MetaWeights> {
        match &self.combination {
            Combination::Weights(w) => Some(w),
            Combination::Logistic(_) => None,
        }
    }

    /// Full-data base predictions, one column per learner.
    pub fn base_predictions(&self, features: &Matrix) -> Result<Vec<Probabilities>> {
        self.learners.iter().map(|m| m.predict(features)).collect()
    }

    pub fn predict(&self, features: &Matrix) -> Result<Probabilities> {
        let cols = self.base_predictions(features)?;
        let mut row = vec![0.0; cols.len()];
        let values = (0..features.rows())
            .map(|i| {
                for (r, c) in row.iter_mut().zip(&cols) {
                    *r = c.values()[i];
                }
                match &self.combination {
                    Combination::Weights(w) => w.combine(&row),
                    Combination::Logistic(m) => m.combine(&row),
                }
            })
            .collect();
        Ok(Probabilities::clipped(values))
    }
}
