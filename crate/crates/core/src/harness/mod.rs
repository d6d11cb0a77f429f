//! Experiment engine: learner specifications, bias-variance estimation, grid
//! search, split benchmarks and result export.
//!
//! Every randomized step takes its seed from [`crate::rng::derive_seed`], so a
//! configuration and a seed list fully determine the output files.

mod bench;
mod bias_variance;
mod experiment;
mod grid;
mod learner;

pub use bench::{bench_split, BenchConfig, BenchLayout, BenchRow, BenchTable, TreeKind};
pub use bias_variance::{bias_variance_decompose, BvConfig, BvReport};
pub use experiment::{
    export, read_results_csv, read_results_json, run_experiment, summarize, write_outputs, CsvRow, DatasetSpec,
    EvaluationSpec, ExperimentConfig, ExperimentResults, ExportFormat, MetricName, MetricSummary, Protocol,
    ResultRecord, CSV_HEADER,
};
pub use grid::{expand_grid, grid_search, GridAxis, GridResult, GridRow};
pub use learner::{validation_loss, LearnerSpec, Model};
