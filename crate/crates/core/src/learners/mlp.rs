//! Fully connected sigmoid network with a sigmoid output unit, trained on
//! cross-entropy by mini-batch SGD with classical momentum.

use serde::{Deserialize, Serialize};

use super::boost::{sigmoid, softplus};
use crate::data::{Dataset, Matrix};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Hyperparameters consumed by [`train`].
#[derive(Debug, Clone, Copy)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl MlpModel {
    /// `sizes = [inputs, hidden..., 1]`, every parameter zero.
    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Layer { inputs: w[0], outputs: w[1], weights: vec![0.0; w[0] * w[1]], bias: vec![0.0; w[1]] })
            .collect();
        MlpModel { layers }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random(sizes: &[usize], rng: &mut SeededRng) -> Self {
        let mut m = MlpModel::zeros(sizes);
        for layer in &mut m.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = (2.0 * rng.unit() - 1.0) * bound;
            }
        }
        m
    }

    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flattened parameters: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = flat[k];
                k += 1;
            }
        }
    }

    fn scratch(&self) -> Scratch {
        let mut acts = vec![vec![0.0; self.n_inputs()]];
        acts.extend(self.layers.iter().map(|l| vec![0.0; l.outputs]));
        let widest = self.layers.iter().map(|l| l.inputs.max(l.outputs)).max().unwrap_or(0);
        Scratch { acts, delta: Vec::with_capacity(widest), next: Vec::with_capacity(widest) }
    }

    /// Fills `s.acts` with the activations of every layer, input first. The
    /// last entry holds the output pre-activation instead of the probability.
    fn forward_into(&self, row: &[f64], s: &mut Scratch) {
        s.acts[0].copy_from_slice(row);
        for (li, l) in self.layers.iter().enumerate() {
            let (done, rest) = s.acts.split_at_mut(li + 1);
            let input = &done[li];
            let out = &mut rest[0];
            let last = li + 1 == self.layers.len();
            for (o, slot) in out.iter_mut().enumerate() {
                let w = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                let z = l.bias[o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                *slot = if last { z } else { sigmoid(z) };
            }
        }
    }

    pub fn logit_row(&self, row: &[f64]) -> f64 {
        let mut s = self.scratch();
        self.forward_into(row, &mut s);
        s.acts.last().map_or(0.0, |o| o[0])
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit_row(row))
    }

    /// Mean cross-entropy over `rows`.
    pub fn loss(&self, x: &Matrix, y: &[f64], rows: &[usize]) -> f64 {
        rows.iter()
            .map(|&i| {
                let z = self.logit_row(x.row(i));
                softplus(z) - y[i] * z
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// Gradient of [`MlpModel::loss`], flattened like [`MlpModel::params`].
    pub fn gradient(&self, x: &Matrix, y: &[f64], rows: &[usize]) -> Vec<f64> {
        let mut grad = vec![0.0; self.n_params()];
        self.accumulate_gradient(x, y, rows, &mut grad, &mut self.scratch());
        let scale = 1.0 / rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        grad
    }

    fn accumulate_gradient(&self, x: &Matrix, y: &[f64], rows: &[usize], grad: &mut [f64], s: &mut Scratch) {
        for &i in rows {
            self.forward_into(x.row(i), s);
            let z_out = s.acts.last().expect("output layer")[0];
            s.delta.clear();
            s.delta.push(sigmoid(z_out) - y[i]);
            let mut off = grad.len();
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let input = &s.acts[li];
                off -= l.weights.len() + l.bias.len();
                for (o, &d) in s.delta.iter().enumerate() {
                    let gw = &mut grad[off + o * l.inputs..off + (o + 1) * l.inputs];
                    gw.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                    grad[off + l.weights.len() + o] += d;
                }
                if li > 0 {
                    s.next.clear();
                    for (k, &a) in input.iter().enumerate() {
                        let back: f64 = s.delta.iter().enumerate().map(|(o, d)| l.weights[o * l.inputs + k] * d).sum();
                        s.next.push(back * a * (1.0 - a));
                    }
                    std::mem::swap(&mut s.delta, &mut s.next);
                }
            }
        }
    }
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

/// Shuffles each epoch from `rng` and applies `v = momentum * v - lr * g; w += v` per batch.
pub fn train(model: &mut MlpModel, x: &Matrix, y: &[f64], rows: &[usize], params: SgdParams, rng: &mut SeededRng) {
    let n_params = model.n_params();
    let mut velocity = vec![0.0; n_params];
    let mut grad = vec![0.0; n_params];
    let mut flat = model.params();
    let mut order = rows.to_vec();
    let mut scratch = model.scratch();
    let batch = params.batch_size.max(1);
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            grad.fill(0.0);
            model.accumulate_gradient(x, y, chunk, &mut grad, &mut scratch);
            let scale = params.learning_rate / chunk.len() as f64;
            for k in 0..n_params {
                velocity[k] = params.momentum * velocity[k] - scale * grad[k];
                flat[k] += velocity[k];
            }
            model.set_params(&flat);
        }
    }
}

pub fn fit(
    data: &Dataset,
    hidden: &[usize],
    params: SgdParams,
    bootstrap_fraction: Option<f64>,
    rng: &mut SeededRng,
) -> MlpModel {
    let n = data.n_rows();
    let mut sizes = vec![data.n_features()];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let mut model = MlpModel::random(&sizes, rng);
    let rows = match bootstrap_fraction {
        Some(f) => rng.subsample(n, ((f * n as f64).round() as usize).clamp(1, n)),
        None => (0..n).collect(),
    };
    train(&mut model, data.features(), &data.targets(), &rows, params, rng);
    model
}
