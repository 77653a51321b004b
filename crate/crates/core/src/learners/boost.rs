//! Gradient boosting on the logistic loss.
//!
//! `F_0` is the training log-odds; each round fits the base learner to the
//! negative gradient `y - sigmoid(F)` by least squares and adds
//! `shrinkage * fit`. Because the logistic loss has curvature at most 1/4,
//! any least-squares fit of the residuals is a descent step for shrinkage
//! below 8, so the training loss never increases.

use serde::{Deserialize, Serialize};

use super::tree::{self, Binner, TreeNodes, TreeParams};
use super::BoostBase;
use crate::data::{Dataset, Matrix};
use crate::rng::SeededRng;

/// Leaf size used by tree base learners.
pub const BASE_MIN_LEAF: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Tree { nodes: TreeNodes },
    Linear { feature: usize, intercept: f64, slope: f64 },
}

impl Stage {
    fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Stage::Tree { nodes } => nodes.predict_row(row),
            Stage::Linear { feature, intercept, slope } => intercept + slope * row[*feature],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub initial: f64,
    pub shrinkage: f64,
    pub stages: Vec<Stage>,
    /// Mean training logistic loss after 0, 1, ..., M rounds.
    pub train_loss: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean of `log(1 + e^F) - y F`.
pub fn logistic_loss(score: &[f64], y: &[f64]) -> f64 {
    score.iter().zip(y).map(|(&f, &t)| softplus(f) - t * f).sum::<f64>() / score.len() as f64
}

/// Componentwise least squares: the single feature whose simple regression
/// on `r` removes the most squared error.
fn best_linear(x: &Matrix, r: &[f64]) -> Option<Stage> {
    let n = r.len() as f64;
    let r_mean = r.iter().sum::<f64>() / n;
    let mut best: Option<(f64, Stage)> = None;
    for j in 0..x.cols() {
        let x_mean = (0..r.len()).map(|i| x.get(i, j)).sum::<f64>() / n;
        let (mut sxx, mut sxr) = (0.0, 0.0);
        for (i, &ri) in r.iter().enumerate() {
            let d = x.get(i, j) - x_mean;
            sxx += d * d;
            sxr += d * (ri - r_mean);
        }
        if sxx <= 1e-12 * n {
            continue;
        }
        let gain = sxr * sxr / sxx;
        if best.as_ref().is_none_or(|(g, _)| gain > *g) {
            let slope = sxr / sxx;
            best = Some((gain, Stage::Linear { feature: j, intercept: r_mean - slope * x_mean, slope }));
        }
    }
    best.map(|(_, s)| s)
}

pub fn fit(data: &Dataset, n_rounds: usize, shrinkage: f64, base: BoostBase, rng: &mut SeededRng) -> BoostModel {
    let x = data.features();
    let y = data.targets();
    let n = y.len();
    let rate = y.iter().sum::<f64>() / n as f64;
    let initial = (rate / (1.0 - rate)).ln();
    let mut score = vec![initial; n];
    let mut train_loss = vec![logistic_loss(&score, &y)];
    let binned = match base {
        BoostBase::Tree { .. } => {
            let b = Binner::fit(x);
            let codes = b.transform(x);
            Some((b, codes))
        }
        BoostBase::Linear => None,
    };
    let mut stages = Vec::with_capacity(n_rounds);
    let mut residual = vec![0.0; n];
    for _ in 0..n_rounds {
        for i in 0..n {
            residual[i] = y[i] - sigmoid(score[i]);
        }
        let stage = match (&base, &binned) {
            (BoostBase::Tree { max_depth }, Some((binner, codes))) => {
                let mut rows: Vec<u32> = (0..n as u32).collect();
                let params = TreeParams { max_depth: Some(*max_depth), min_leaf: BASE_MIN_LEAF, mtry: usize::MAX };
                Stage::Tree { nodes: tree::grow(codes, binner, &residual, &mut rows, params, rng) }
            }
            _ => match best_linear(x, &residual) {
                Some(s) => s,
                None => Stage::Linear { feature: 0, intercept: residual.iter().sum::<f64>() / n as f64, slope: 0.0 },
            },
        };
        for (i, row) in x.row_iter().enumerate() {
            score[i] += shrinkage * stage.eval(row);
        }
        train_loss.push(logistic_loss(&score, &y));
        stages.push(stage);
    }
    BoostModel { initial, shrinkage, stages, train_loss }
}

impl BoostModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        // same accumulation order as training
        self.stages.iter().fold(self.initial, |acc, s| acc + self.shrinkage * s.eval(row))
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.score_row(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }
}
