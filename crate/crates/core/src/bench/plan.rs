//! Benchmark plan documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlgorithmSpec, PRESET_NAMES};
use crate::simgen::{condition_catalog, SimCondition};

pub const PLAN_VERSION: u32 = 1;
pub const FULL_SIZES: [usize; 5] = [500, 1000, 2500, 5000, 10000];
pub const FULL_REPLICATIONS: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

/// One competitor. Exactly one of `preset` and `spec` is set; cells with
/// `n > max_n` are recorded as skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<AlgorithmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
}

impl AlgorithmEntry {
    pub fn preset(name: &str) -> Self {
        AlgorithmEntry { name: name.to_string(), preset: Some(name.to_string()), spec: None, max_n: None }
    }

    pub fn custom(name: &str, spec: AlgorithmSpec) -> Self {
        AlgorithmEntry { name: name.to_string(), preset: None, spec: Some(spec), max_n: None }
    }

    pub fn with_max_n(mut self, max_n: usize) -> Self {
        self.max_n = Some(max_n);
        self
    }

    pub fn resolve(&self) -> Result<AlgorithmSpec> {
        match (&self.preset, &self.spec) {
            (Some(p), None) => AlgorithmSpec::preset(p),
            (None, Some(s)) => {
                s.validate()?;
                Ok(s.clone())
            }
            _ => Err(Error::invalid(format!("algorithm '{}' needs exactly one of preset or spec", self.name))),
        }
    }

    pub fn runs_at(&self, n: usize) -> bool {
        self.max_n.is_none_or(|m| n <= m)
    }
}

fn default_version() -> u32 {
    PLAN_VERSION
}

fn default_true() -> bool {
    true
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    #[serde(default = "default_version")]
    pub version: u32,
    pub conditions: Vec<SimCondition>,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub thread_count: Option<usize>,
    /// When false, `fit_seconds` is left empty so results files depend only
    /// on the plan.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl BenchPlan {
    /// Every condition, size and preset, ten replications each.
    pub fn full(master_seed: u64) -> Self {
        BenchPlan {
            version: PLAN_VERSION,
            conditions: condition_catalog(),
            sizes: FULL_SIZES.to_vec(),
            replications: FULL_REPLICATIONS,
            algorithms: PRESET_NAMES.iter().map(|n| AlgorithmEntry::preset(n)).collect(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            master_seed,
            thread_count: None,
            record_timing: true,
        }
    }

    /// The same factorial layout with fewer replications and the expensive
    /// ensembles capped below the largest sizes.
    pub fn desk(master_seed: u64) -> Self {
        let cap = |name: &str, max_n: usize| AlgorithmEntry::preset(name).with_max_n(max_n);
        BenchPlan {
            replications: 2,
            algorithms: vec![
                cap("superlearner", 1000),
                AlgorithmEntry::preset("fast-superlearner"),
                cap("mixed-deep", 1000),
                cap("deep-knn", 2500),
                AlgorithmEntry::preset("knn-superlearner"),
                AlgorithmEntry::preset("knn5"),
                AlgorithmEntry::preset("dnn-mirror"),
                cap("dnn-tuned", 2500),
            ],
            ..BenchPlan::full(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PLAN_VERSION {
            return Err(Error::Document(format!("unsupported plan version {} (expected {PLAN_VERSION})", self.version)));
        }
        if self.conditions.is_empty() || self.sizes.is_empty() || self.algorithms.is_empty() {
            return Err(Error::invalid("plan needs conditions, sizes and algorithms"));
        }
        for c in &self.conditions {
            c.validate()?;
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sizes must be positive and strictly ascending"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie in (0,1)"));
        }
        if self.thread_count == Some(0) {
            return Err(Error::invalid("thread_count must be positive"));
        }
        let mut names: Vec<&str> = self.algorithms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("algorithm names must be unique"));
        }
        for a in &self.algorithms {
            a.resolve()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: BenchPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row_count(&self) -> usize {
        self.conditions.len() * self.sizes.len() * self.replications * self.algorithms.len()
    }
}
