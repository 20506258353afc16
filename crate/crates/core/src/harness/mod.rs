//! Seeded, parallel experiment runs and their CSV artifacts.

mod config;
mod output;
mod run;

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{
    emit_csv, mean_and_stderr, mean_runtimes, read_summary_csv, read_trace_csv, summarize, summary_path, SummaryRow,
    TraceRow,
};
pub use run::{
    generate_problem, named_rng, run_experiment, run_experiment_with, run_learner, run_repetition, thread_pool,
    Repetition, RoundRecord, RunTrace, THREADS_ENV,
};
