//! Superlearner stacking, deep cascades of fitted learners, KNN variants and
//! feedforward networks for binary classification, plus the synthetic
//! benchmark that compares them across sample sizes.
//!
//! Layout:
//! - [`data`], [`split`], [`metrics`], [`rng`]: shared data model, splitting,
//!   evaluation and deterministic randomness.
//! - [`learners`]: the seven base-learner families.
//! - [`ensembles`]: superlearner, cascade and the named presets.
//! - [`simgen`]: the nine generative conditions and a Bayes-rate oracle.
//! - [`bench`]: the factorial experiment runner, summaries and plots.
//! - [`io`]: CSV loading and atomic file output.
//! - [`model`]: the persisted model document.

pub mod bench;
pub mod data;
pub mod ensembles;
pub mod error;
pub mod io;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod simgen;
pub mod split;

pub use data::{Dataset, Matrix, Probabilities};
pub use error::{Error, Result};
pub use learners::{FittedLearner, LearnerSpec};
pub use metrics::MetricReport;
pub use rng::SeededRng;
pub use model::{AlgorithmSpec, FittedModel, ModelDocument};
pub use rayon::ThreadPool;

/// A worker pool of exactly `threads` threads; run work inside it with
/// `pool.install(..)`. Results never depend on the thread count.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}
