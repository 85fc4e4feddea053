//! Multi-seed experiments and the comparison sweeps built on them.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{AblationSwitches, ExperimentConfig};
use super::report::{fmt_num, mean_std, median, ExperimentResult, SeedRun, Table};
use super::run::RunState;
use crate::error::{GepoError, Result};
use crate::graph::{compute_centralities, export_graph, CentralityMetric, CentralityScores};
use crate::policy::Algorithm;
use crate::scalar::Scalar;

/// Trains one seed from scratch and runs the final greedy evaluation.
pub fn run_seed<T: Scalar>(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    train_seed::<T>(config, seed).map(|(run, _)| run)
}

/// Like [`run_seed`] but also hands back the trained state.
pub fn train_seed<T: Scalar>(config: &ExperimentConfig, seed: u64) -> Result<(SeedRun, RunState<T>)> {
    let started = Instant::now();
    let mut state = RunState::<T>::new(config, seed)?;
    let mut metrics = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        metrics.push(state.training_iteration()?);
    }
    let final_success = state.evaluate(config.eval_episodes)?;
    let iterations_to_threshold =
        metrics.iter().find(|m| m.greedy_success >= config.success_threshold).map(|m| m.iteration);
    let run = SeedRun {
        seed,
        metrics,
        final_success,
        iterations_to_threshold,
        final_nodes: state.graph.vertex_count(),
        final_edges: state.graph.edge_count(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((run, state))
}

/// Runs every seed of `config`. Seeds are independent, so they run in
/// parallel without affecting the results.
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let runs = config.seeds.par_iter().map(|&s| run_seed::<T>(config, s)).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult { config: config.clone(), runs })
}

/// Result of a sweep: the rendered table and the runs behind each row.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub table: Table,
    pub results: Vec<(String, ExperimentResult)>,
}

impl SweepResult {
    pub fn get(&self, label: &str) -> Option<&ExperimentResult> {
        self.results.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }
}

const OUTCOME_COLUMNS: [&str; 6] =
    ["success_mean", "success_std", "success_median", "iters_to_threshold_median", "nodes_mean", "edges_mean"];

fn outcome_cells(r: &ExperimentResult) -> Vec<String> {
    let (m, s) = mean_std(&r.final_successes());
    let nodes: Vec<f64> = r.runs.iter().map(|x| x.final_nodes as f64).collect();
    let edges: Vec<f64> = r.runs.iter().map(|x| x.final_edges as f64).collect();
    vec![
        fmt_num(m),
        fmt_num(s),
        fmt_num(r.median_final_success()),
        fmt_num(r.median_iterations_to_threshold()),
        fmt_num(median(&nodes)),
        fmt_num(median(&edges)),
    ]
}

fn labelled_table(first: &str, results: &[(String, ExperimentResult)]) -> Table {
    let cols: Vec<&str> = std::iter::once(first).chain(OUTCOME_COLUMNS).collect();
    let mut t = Table::new(&cols);
    for (label, r) in results {
        t.push(std::iter::once(label.clone()).chain(outcome_cells(r)).collect());
    }
    t
}

/// Runs the same config under each algorithm with identical seeds.
pub fn compare<T: Scalar>(config: &ExperimentConfig, algorithms: &[Algorithm]) -> Result<SweepResult> {
    if algorithms.is_empty() {
        return Err(GepoError::Config("compare needs at least one algorithm".into()));
    }
    let results = algorithms
        .iter()
        .map(|&a| {
            let cfg = ExperimentConfig { algorithm: a, ..config.clone() };
            Ok((a.to_string(), run_experiment::<T>(&cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { table: labelled_table("algorithm", &results), results })
}

/// Full GEPO, the three single-component ablations and three pairwise ones.
pub fn ablation_variants() -> [AblationSwitches; 7] {
    let s = |intrinsic_reward, aggregation, dynamic_discount| AblationSwitches {
        intrinsic_reward,
        aggregation,
        dynamic_discount,
    };
    [
        s(true, true, true),
        s(false, true, true),
        s(true, false, true),
        s(true, true, false),
        s(true, false, false),
        s(false, true, false),
        s(false, false, true),
    ]
}

pub fn ablation_suite<T: Scalar>(config: &ExperimentConfig) -> Result<SweepResult> {
    let results = ablation_variants()
        .iter()
        .map(|&ablation| {
            let cfg = ExperimentConfig { algorithm: Algorithm::Gepo, ablation, ..config.clone() };
            Ok((ablation.label(), run_experiment::<T>(&cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { table: labelled_table("configuration", &results), results })
}

/// One run per centrality metric, all on the same seeds.
pub fn centrality_sweep<T: Scalar>(config: &ExperimentConfig) -> Result<SweepResult> {
    let results = CentralityMetric::ALL
        .iter()
        .map(|&metric| {
            let cfg = ExperimentConfig { algorithm: Algorithm::Gepo, metric, ..config.clone() };
            Ok((metric.to_string(), run_experiment::<T>(&cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { table: labelled_table("metric", &results), results })
}

/// One run per group size. Relative time is the mean per-iteration wall time
/// divided by that of the reference size (8 when present, else the first).
pub fn rollout_sweep<T: Scalar>(config: &ExperimentConfig, n_values: &[usize]) -> Result<SweepResult> {
    if n_values.is_empty() {
        return Err(GepoError::Config("rollout sweep needs at least one n".into()));
    }
    let mut results = Vec::with_capacity(n_values.len());
    let mut times = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg = ExperimentConfig { rollouts: n, ..config.clone() };
        // seeds run one after another so the timings are not contended
        let runs = cfg.seeds.iter().map(|&s| run_seed::<T>(&cfg, s)).collect::<Result<Vec<_>>>()?;
        let r = ExperimentResult { config: cfg, runs };
        let per_iter: Vec<f64> = r.runs.iter().flat_map(|x| x.metrics.iter().map(|m| m.timings.total)).collect();
        times.push(mean_std(&per_iter).0);
        results.push((n.to_string(), r));
    }
    let reference = n_values.iter().position(|&n| n == 8).unwrap_or(0);
    let cols = ["n", "success_mean", "success_std", "nodes_mean", "edges_mean", "seconds_per_iter", "relative_time"];
    let mut table = Table::new(&cols);
    for ((label, r), &t) in results.iter().zip(&times) {
        let (m, s) = mean_std(&r.final_successes());
        let nodes = mean_std(&r.runs.iter().map(|x| x.final_nodes as f64).collect::<Vec<_>>()).0;
        let edges = mean_std(&r.runs.iter().map(|x| x.final_edges as f64).collect::<Vec<_>>()).0;
        let rel = if times[reference] > 0.0 { t / times[reference] } else { f64::NAN };
        table.push(vec![
            label.clone(),
            fmt_num(m),
            fmt_num(s),
            fmt_num(nodes),
            fmt_num(edges),
            format!("{t:.6}"),
            fmt_num(rel),
        ]);
    }
    Ok(SweepResult { table, results })
}

/// Trains the first seed and returns the final graph as an edge list.
pub fn train_and_export<T: Scalar>(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    let (_, state) = train_seed::<T>(config, config.seeds[0])?;
    let scores: CentralityScores<T> = compute_centralities(&state.graph, config.metric, config.normalize_centrality)?;
    export_graph(&state.graph, &scores)
}
