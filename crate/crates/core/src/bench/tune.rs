//! Grid search over the MLP's SGD settings.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, LearnerSpec, MlpSpec};
use crate::metrics::{accuracy, DEFAULT_THRESHOLD};
use crate::rng::{derive_seed, SeededRng};
use crate::simgen::{generate, SimCondition};
use crate::split::{split, stratified_split, TrainTestSplit};

pub const VALIDATION_TRAIN_FRACTION: f64 = 0.8;

/// Candidate values; expanded with the learning rate varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnGrid {
    pub learning_rates: Vec<f64>,
    pub momenta: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
}

impl Default for DnnGrid {
    fn default() -> Self {
        DnnGrid {
            learning_rates: vec![0.01, 0.1],
            momenta: vec![0.0, 0.9],
            batch_sizes: vec![16, 64],
            epochs: vec![50, 200],
        }
    }
}

impl DnnGrid {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.momenta.is_empty() || self.batch_sizes.is_empty() || self.epochs.is_empty() {
            return Err(Error::invalid("every DNN grid axis needs at least one value"));
        }
        Ok(())
    }

    pub fn specs(&self, base: &MlpSpec) -> Vec<MlpSpec> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &momentum in &self.momenta {
                for &batch_size in &self.batch_sizes {
                    for &epochs in &self.epochs {
                        out.push(MlpSpec { learning_rate, momentum, batch_size, epochs, ..base.clone() });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: MlpSpec,
    pub best_index: usize,
    /// Validation accuracy of every candidate, in grid order.
    pub validation_accuracy: Vec<f64>,
    /// The internal split, as indices into the tuning data.
    pub split: TrainTestSplit,
    /// Seed every candidate was fitted with.
    pub fit_seed: u64,
}

/// Fits every candidate on 80% of `data` (stratified) with a common seed and
/// keeps the most accurate on the other 20%; the first wins ties.
pub fn tune_mlp(candidates: &[MlpSpec], data: &Dataset, rng: &SeededRng) -> Result<TuneOutcome> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty tuning grid"));
    }
    let master = rng.master_seed();
    let split = stratified_split(data.labels(), VALIDATION_TRAIN_FRACTION, &mut SeededRng::new(derive_seed(master, &[0])))?;
    let train = data.subset(&split.train_indices);
    let valid = data.subset(&split.test_indices);
    let fit_seed = derive_seed(master, &[1]);
    let fit_rng = SeededRng::new(fit_seed);
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let model = learners::fit(&LearnerSpec::Mlp(c.clone()), &train, &fit_rng)?;
        scores.push(accuracy(&model.predict(valid.features())?, valid.labels(), DEFAULT_THRESHOLD)?);
    }
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(TuneOutcome { best: candidates[best_index].clone(), best_index, validation_accuracy: scores, split, fit_seed })
}

/// Generates `n` rows of `condition`, takes the 70% training part, and tunes on it.
pub fn tune_dnn(grid: &[MlpSpec], condition: &SimCondition, n: usize, rng: &SeededRng) -> Result<TuneOutcome> {
    let master = rng.master_seed();
    let data = generate(condition, n, &mut SeededRng::new(derive_seed(master, &[2])))?;
    let outer = split(n, 0.7, &mut SeededRng::new(derive_seed(master, &[3])))?;
    tune_mlp(grid, &data.subset(&outer.train_indices), &SeededRng::new(derive_seed(master, &[4])))
}
