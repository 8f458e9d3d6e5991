//! Experiment plumbing: TOML configuration, per-seed runs with their
//! artifacts, matched-budget comparisons and SVG charts.

mod compare;
mod config;
mod plot;
mod run;

pub use compare::{
    compare, median_to_threshold, write_merged_csv, AlgorithmSummary, ComparedRun, ComparisonReport,
    MERGED_CSV_HEADER, THRESHOLD_FRACTION,
};
pub use config::{default_aberration, ExperimentConfig, LayoutConfig, Method, OutputConfig, TaskSpec};
pub use plot::{emit_plots, plot_tables, render_svg, MetricsTable, Series};
pub use run::{
    build_env, build_objective, ideal_solution, run_experiment, run_insilico, run_seed, task_bench, RunRecord,
    RunSummary, INSILICO_CSV_HEADER,
};
