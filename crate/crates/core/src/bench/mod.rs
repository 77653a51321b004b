//! The factorial simulation benchmark.

pub mod plan;
pub mod plot;
pub mod run;
pub mod summary;
pub mod tune;

pub use plan::{AlgorithmEntry, BenchPlan, PLAN_VERSION};
pub use plot::{emit_plot, render_svg};
pub use run::{
    algorithm_seed, cell_seed, parse_results_csv, read_results_csv, results_csv, run, run_with, write_results_csv,
    ResultRow, RESULTS_HEADER, SKIPPED,
};
pub use summary::{summarize, summary_csv, write_summary_csv, Moments, SummaryRow};
pub use tune::{tune_dnn, tune_mlp, DnnGrid, TuneOutcome};
