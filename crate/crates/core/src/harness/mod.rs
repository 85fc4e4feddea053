//! End-to-end training runs, metrics output and experiment sweeps.

mod config;
mod report;
mod run;
mod sweeps;

pub use config::{AblationSwitches, EmbedderKind, ExperimentConfig};
pub use report::{mean_std, median, suffixed, ExperimentResult, SeedRun, Table, METRIC_COLUMNS, TIMING_COLUMNS};
pub use run::{rollout_seed, IterationMetrics, PhaseTimings, RunState};
pub use sweeps::{
    ablation_suite, ablation_variants, centrality_sweep, compare, rollout_sweep, run_experiment, run_seed,
    train_and_export, train_seed, SweepResult,
};
