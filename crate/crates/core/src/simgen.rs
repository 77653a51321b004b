//! Synthetic binary-outcome conditions.
//!
//! Thirteen i.i.d. standard-normal features, of which the first four drive a
//! latent score `s = eta(x1..x4) + N(0, sigma^2)`; the label is `1{s > 0}`,
//! optionally flipped at random afterwards.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const GENERATOR_VERSION: u32 = 1;
pub const DEFAULT_FLIP_RATE: f64 = 0.075;
pub const FLIP_RATE_RANGE: (f64, f64) = (0.05, 0.10);
pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    Linear,
    Nonlinear,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Low,
    High,
}

impl Relationship {
    pub fn name(self) -> &'static str {
        match self {
            Relationship::Linear => "linear",
            Relationship::Nonlinear => "nonlinear",
            Relationship::Mixed => "mixed",
        }
    }

    /// Signal as a function of the four true predictors.
    pub fn eta(self, x: &[f64]) -> f64 {
        match self {
            Relationship::Linear => 1.5 * x[0] - 2.0 * x[1] + x[2] + 0.5 * x[3],
            Relationship::Nonlinear => 2.0 * (2.0 * x[0]).sin() + (x[1] * x[1] - 1.0) + 1.5 * x[2] * x[3],
            Relationship::Mixed => 1.5 * x[0] - 2.0 * x[1] + 2.0 * (2.0 * x[2]).sin() + (x[3] * x[3] - 1.0),
        }
    }
}

impl NoiseLevel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseLevel::Low => "low",
            NoiseLevel::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    pub relationship: Relationship,
    pub noise: NoiseLevel,
    pub misclassification_rate: Option<f64>,
}

impl SimCondition {
    pub fn new(relationship: Relationship, noise: NoiseLevel, misclassification_rate: Option<f64>) -> Result<Self> {
        let c = SimCondition { relationship, noise, misclassification_rate };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.misclassification_rate {
            if self.noise != NoiseLevel::High {
                return Err(Error::invalid("misclassification is only defined for high noise"));
            }
            if !(FLIP_RATE_RANGE.0..=FLIP_RATE_RANGE.1).contains(&r) {
                return Err(Error::invalid(format!("misclassification rate {r} outside [0.05, 0.10]")));
            }
        }
        Ok(())
    }

    /// `linear-low`, `nonlinear-high`, `mixed-high-mis`, ...
    pub fn id(&self) -> String {
        let base = format!("{}-{}", self.relationship.name(), self.noise.name());
        if self.misclassification_rate.is_some() {
            base + "-mis"
        } else {
            base
        }
    }

    /// Parses an id; the `-mis` suffix selects the default flip rate.
    pub fn from_id(id: &str) -> Result<Self> {
        condition_catalog()
            .into_iter()
            .find(|c| c.id() == id)
            .ok_or_else(|| Error::invalid(format!("unknown condition '{id}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_true: usize,
    pub n_noise: usize,
    pub sigma_low: f64,
    pub sigma_high: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { n_true: 4, n_noise: 9, sigma_low: 0.5, sigma_high: 2.0 }
    }
}

impl GeneratorParams {
    pub fn n_features(&self) -> usize {
        self.n_true + self.n_noise
    }

    pub fn sigma(&self, noise: NoiseLevel) -> f64 {
        match noise {
            NoiseLevel::Low => self.sigma_low,
            NoiseLevel::High => self.sigma_high,
        }
    }
}

/// The nine conditions: each relationship at low noise, high noise, and
/// high noise with label flipping.
pub fn condition_catalog() -> Vec<SimCondition> {
    let mut out = Vec::with_capacity(9);
    for r in [Relationship::Linear, Relationship::Nonlinear, Relationship::Mixed] {
        out.push(SimCondition { relationship: r, noise: NoiseLevel::Low, misclassification_rate: None });
        out.push(SimCondition { relationship: r, noise: NoiseLevel::High, misclassification_rate: None });
        out.push(SimCondition {
            relationship: r,
            noise: NoiseLevel::High,
            misclassification_rate: Some(DEFAULT_FLIP_RATE),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub data: Dataset,
    /// Rows whose label was flipped, ascending.
    pub flipped: Vec<usize>,
}

pub fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

pub fn generate(condition: &SimCondition, n: usize, rng: &mut SeededRng) -> Result<Dataset> {
    generate_with(condition, &GeneratorParams::default(), n, rng).map(|s| s.data)
}

/// Draw order per row: the features, then the latent noise, then (with
/// flipping) one uniform.
pub fn generate_with(condition: &SimCondition, params: &GeneratorParams, n: usize, rng: &mut SeededRng) -> Result<Simulated> {
    condition.validate()?;
    if n < MIN_ROWS {
        return Err(Error::invalid(format!("need at least {MIN_ROWS} rows, got {n}")));
    }
    if params.n_true != 4 {
        return Err(Error::invalid("the signal forms use exactly 4 true predictors"));
    }
    let p = params.n_features();
    let sigma = params.sigma(condition.noise);
    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    let mut flipped = Vec::new();
    for i in 0..n {
        let start = features.len();
        for _ in 0..p {
            features.push(StandardNormal.sample(rng));
        }
        let eps: f64 = StandardNormal.sample(rng);
        let s = condition.relationship.eta(&features[start..start + 4]) + sigma * eps;
        let mut y = u8::from(s > 0.0);
        if let Some(r) = condition.misclassification_rate {
            if rng.unit() < r {
                y = 1 - y;
                flipped.push(i);
            }
        }
        labels.push(y);
    }
    let data = Dataset::new(Matrix::new(n, p, features)?, labels, feature_names(p))?;
    Ok(Simulated { data, flipped })
}

/// `(1-r) a + r (1-a)`.
pub fn flip_adjusted(accuracy: f64, rate: f64) -> f64 {
    (1.0 - rate) * accuracy + rate * (1.0 - accuracy)
}

/// Monte-Carlo accuracy of the rule `1{eta(x) > 0}` under `condition`.
pub fn bayes_accuracy(condition: &SimCondition, n_mc: usize, rng: &mut SeededRng) -> Result<f64> {
    bayes_accuracy_with(condition, GeneratorParams::default().sigma(condition.noise), n_mc, rng)
}

pub fn bayes_accuracy_with(condition: &SimCondition, sigma: f64, n_mc: usize, rng: &mut SeededRng) -> Result<f64> {
    condition.validate()?;
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be positive"));
    }
    let mut total = 0.0;
    let mut x = [0.0; 4];
    let std = Normal::standard();
    for _ in 0..n_mc {
        for v in &mut x {
            *v = StandardNormal.sample(rng);
        }
        let eta = condition.relationship.eta(&x).abs();
        total += if sigma > 0.0 {
            std.cdf(eta / sigma)
        } else if eta > 0.0 {
            1.0
        } else {
            0.5
        };
    }
    let acc = total / n_mc as f64;
    Ok(match condition.misclassification_rate {
        Some(r) => flip_adjusted(acc, r),
        None => acc,
    })
}
