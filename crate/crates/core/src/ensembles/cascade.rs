//! Deep cascades with fitted learners as mapping functions.
//!
//! Layer `l` fits each of its learners on a subsample (without replacement)
//! of the layer input; the layer output is the matrix of their predictions.
//! The next layer sees that matrix, followed by the original features when
//! `passthrough` is set. The final layer's columns are averaged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, Probabilities};
use crate::error::{Error, Result};
use crate::learners::{self, FittedLearner, LearnerSpec};
use crate::rng::{derive_seed, SeededRng};
use crate::split::stratified_folds;

const SUBSAMPLE_KEY: u64 = 0x5AB5;
const FOLD_KEY: u64 = 0xF01D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeMember {
    pub spec: LearnerSpec,
    pub bootstrap_fraction: f64,
}

impl CascadeMember {
    pub fn new(spec: LearnerSpec, bootstrap_fraction: f64) -> Self {
        CascadeMember { spec, bootstrap_fraction }
    }
}

/// How training rows are scored to build the next layer's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerFeatures {
    /// Predictions of the layer models on their own training data.
    #[default]
    InSample,
    /// Out-of-fold predictions from `folds` refits per member.
    OutOfFold { folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub layers: Vec<Vec<CascadeMember>>,
    pub passthrough: bool,
    #[serde(default)]
    pub layer_features: LayerFeatures,
}

impl CascadeSpec {
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.iter().any(Vec::is_empty) {
            return Err(Error::spec("cascade", "every layer needs at least one learner"));
        }
        for m in self.layers.iter().flatten() {
            if !(m.bootstrap_fraction > 0.0 && m.bootstrap_fraction <= 1.0) {
                return Err(Error::spec("cascade", format!("bootstrap fraction {} not in (0,1]", m.bootstrap_fraction)));
            }
            m.spec.validate()?;
        }
        if let LayerFeatures::OutOfFold { folds } = self.layer_features {
            if folds < 2 {
                return Err(Error::spec("cascade", "out-of-fold layer features need at least 2 folds"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCascade {
    pub spec: CascadeSpec,
    pub layers: Vec<Vec<FittedLearner>>,
    pub seed: u64,
    pub n_features: usize,
}

/// Seed handed to the learner at `(layer, index)`.
pub fn member_seed(master: u64, layer: usize, index: usize) -> u64 {
    derive_seed(master, &[layer as u64, index as u64])
}

/// Rows a member trains on; ascending, and all rows when the fraction is 1.
pub fn member_rows(master: u64, layer: usize, index: usize, n: usize, fraction: f64) -> Vec<usize> {
    let count = ((fraction * n as f64).round() as usize).clamp(1, n);
    SeededRng::new(derive_seed(master, &[layer as u64, index as u64, SUBSAMPLE_KEY])).subsample(n, count)
}

fn layer_names(layer: usize, width: usize) -> Vec<String> {
    (0..width).map(|j| format!("layer{}_m{}", layer + 1, j + 1)).collect()
}

fn next_input(outputs: Matrix, original: &Matrix, passthrough: bool) -> Result<Matrix> {
    if passthrough {
        outputs.hstack(original)
    } else {
        Ok(outputs)
    }
}

fn columns_to_matrix(cols: &[Probabilities]) -> Result<Matrix> {
    let v: Vec<Vec<f64>> = cols.iter().map(|c| c.values().to_vec()).collect();
    Matrix::from_columns(&v)
}

pub fn fit_cascade(spec: &CascadeSpec, data: &Dataset, rng: &SeededRng) -> Result<FittedCascade> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::fit("cascade", "empty training data"));
    }
    let master = rng.master_seed();
    let n = data.n_rows();
    let mut input = data.clone();
    let mut fitted_layers = Vec::with_capacity(spec.layers.len());
    for (l, layer) in spec.layers.iter().enumerate() {
        let fitted = layer
            .par_iter()
            .enumerate()
            .map(|(j, m)| {
                let rows = member_rows(master, l, j, n, m.bootstrap_fraction);
                learners::fit(&m.spec, &input.subset(&rows), &SeededRng::new(member_seed(master, l, j)))
            })
            .collect::<Result<Vec<_>>>()?;
        if l + 1 < spec.layers.len() {
            let outputs = match spec.layer_features {
                LayerFeatures::InSample => {
                    let cols = fitted.iter().map(|m| m.predict(input.features())).collect::<Result<Vec<_>>>()?;
                    columns_to_matrix(&cols)?
                }
                LayerFeatures::OutOfFold { folds } => out_of_fold_outputs(layer, &input, master, l, folds)?,
            };
            let features = next_input(outputs, data.features(), spec.passthrough)?;
            let mut names = layer_names(l, layer.len());
            if spec.passthrough {
                names.extend(data.feature_names().iter().cloned());
            }
            input = data.with_features(features, names)?;
        }
        fitted_layers.push(fitted);
    }
    Ok(FittedCascade { spec: spec.clone(), layers: fitted_layers, seed: master, n_features: data.n_features() })
}

fn out_of_fold_outputs(layer: &[CascadeMember], input: &Dataset, master: u64, l: usize, folds: usize) -> Result<Matrix> {
    let n = input.n_rows();
    let assignment = stratified_folds(input.labels(), folds, &mut SeededRng::new(derive_seed(master, &[l as u64, FOLD_KEY])))?;
    let mut out = Matrix::zeros(n, layer.len());
    for v in 0..folds {
        let (train, valid): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] != v);
        let part = input.subset(&train);
        let held_out = input.features().select_rows(&valid);
        let preds = layer
            .par_iter()
            .enumerate()
            .map(|(j, m)| {
                let rows = member_rows(master, l, j, train.len(), m.bootstrap_fraction);
                let seed = derive_seed(member_seed(master, l, j), &[FOLD_KEY, v as u64]);
                learners::fit(&m.spec, &part.subset(&rows), &SeededRng::new(seed))?.predict(&held_out)
            })
            .collect::<Result<Vec<_>>>()?;
        for (j, p) in preds.iter().enumerate() {
            for (&i, &value) in valid.iter().zip(p.values()) {
                out.set(i, j, value);
            }
        }
    }
    Ok(out)
}

impl FittedCascade {
    /// Output matrix of every layer for `features` (before passthrough concatenation).
    pub fn layer_outputs(&self, features: &Matrix) -> Result<Vec<Matrix>> {
        if features.cols() != self.n_features {
            return Err(Error::invalid(format!("cascade expects {} features, got {}", self.n_features, features.cols())));
        }
        let mut input = features.clone();
        let mut outputs = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let cols = layer.iter().map(|m| m.predict(&input)).collect::<Result<Vec<_>>>()?;
            let out = columns_to_matrix(&cols)?;
            input = next_input(out.clone(), features, self.spec.passthrough)?;
            outputs.push(out);
        }
        Ok(outputs)
    }

    pub fn predict(&self, features: &Matrix) -> Result<Probabilities> {
        let outputs = self.layer_outputs(features)?;
        let last = outputs.last().expect("validated non-empty");
        let values = last.row_iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
        Ok(Probabilities::clipped(values))
    }
}
