//! CSV rendering of runs and sweep tables.

use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::IterationMetrics;
use crate::error::{GepoError, Result};

/// Everything recorded for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Vec<IterationMetrics>,
    /// Greedy success rate of the final evaluation pass.
    pub final_success: f64,
    /// First iteration whose greedy success reached the threshold.
    pub iterations_to_threshold: Option<usize>,
    pub final_nodes: usize,
    pub final_edges: usize,
    pub wall_seconds: f64,
}

impl SeedRun {
    /// Iterations to threshold with unsolved runs counted as `iterations + 1`.
    pub fn iterations_to_threshold_or(&self, cap: usize) -> usize {
        self.iterations_to_threshold.unwrap_or(cap + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
}

/// Mean and sample standard deviation (divisor k - 1, 0 for k < 2).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        format!("{x:.6}")
    }
}

fn render(header: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| GepoError::Io { path: PathBuf::from("<memory>"), source: e.into_error() })?;
    Ok(format!("{header}{}", String::from_utf8(body).expect("csv output is utf-8")))
}

pub const METRIC_COLUMNS: [&str; 14] = [
    "iteration",
    "success_rate",
    "mean_extrinsic_return",
    "mean_shaped_return",
    "mean_length",
    "greedy_success",
    "nodes",
    "edges",
    "loss",
    "surrogate",
    "value_loss",
    "entropy",
    "grad_norm",
    "final_eval",
];

pub const TIMING_COLUMNS: [&str; 8] =
    ["iteration", "rollout", "graph_update", "centrality", "advantage", "update", "total", "graph_share"];

impl ExperimentResult {
    fn header(&self, seed: Option<u64>) -> String {
        let mut h = self.config.header();
        if let Some(s) = seed {
            h.push_str(&format!("# run_seed = {s}\n"));
        }
        h
    }

    /// Per-iteration metrics plus the final evaluation row. Contains no
    /// timings, so it is reproducible byte for byte.
    pub fn metrics_csv(&self, run: &SeedRun) -> Result<String> {
        let mut rows: Vec<Vec<String>> = run
            .metrics
            .iter()
            .map(|m| {
                vec![
                    m.iteration.to_string(),
                    num(m.success_rate),
                    num(m.mean_extrinsic_return),
                    num(m.mean_shaped_return),
                    num(m.mean_length),
                    num(m.greedy_success),
                    m.nodes.to_string(),
                    m.edges.to_string(),
                    num(m.loss),
                    num(m.surrogate),
                    num(m.value_loss),
                    num(m.entropy),
                    num(m.grad_norm),
                    String::new(),
                ]
            })
            .collect();
        let mut last = vec![String::new(); METRIC_COLUMNS.len()];
        last[0] = "final".into();
        last[6] = run.final_nodes.to_string();
        last[7] = run.final_edges.to_string();
        last[13] = num(run.final_success);
        rows.push(last);
        render(&self.header(Some(run.seed)), &METRIC_COLUMNS, &rows)
    }

    pub fn timing_csv(&self, run: &SeedRun) -> Result<String> {
        let rows: Vec<Vec<String>> = run
            .metrics
            .iter()
            .map(|m| {
                let t = &m.timings;
                vec![
                    m.iteration.to_string(),
                    format!("{:.9}", t.rollout),
                    format!("{:.9}", t.graph_update),
                    format!("{:.9}", t.centrality),
                    format!("{:.9}", t.advantage),
                    format!("{:.9}", t.update),
                    format!("{:.9}", t.total),
                    num(t.graph_share()),
                ]
            })
            .collect();
        render(&self.header(Some(run.seed)), &TIMING_COLUMNS, &rows)
    }

    /// Seed-averaged learning curve on a common iteration axis.
    pub fn curve_csv(&self) -> Result<String> {
        let iters = self.runs.iter().map(|r| r.metrics.len()).min().unwrap_or(0);
        let rows: Vec<Vec<String>> = (0..iters)
            .map(|i| {
                let col = |f: fn(&IterationMetrics) -> f64| {
                    mean_std(&self.runs.iter().map(|r| f(&r.metrics[i])).collect::<Vec<_>>())
                };
                let (s, ss) = col(|m| m.success_rate);
                let (g, gs) = col(|m| m.greedy_success);
                let (r, rs) = col(|m| m.mean_extrinsic_return);
                let (n, _) = col(|m| m.nodes as f64);
                let (e, _) = col(|m| m.edges as f64);
                vec![i.to_string(), num(s), num(ss), num(g), num(gs), num(r), num(rs), num(n), num(e)]
            })
            .collect();
        let cols = [
            "iteration",
            "success_mean",
            "success_std",
            "greedy_mean",
            "greedy_std",
            "return_mean",
            "return_std",
            "nodes_mean",
            "edges_mean",
        ];
        render(&self.header(None), &cols, &rows)
    }

    /// One row per seed followed by `mean` and `std` rows across seeds.
    pub fn summary_csv(&self) -> Result<String> {
        let cols = ["seed", "final_success", "iterations_to_threshold", "final_nodes", "final_edges"];
        let mut rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                vec![
                    r.seed.to_string(),
                    num(r.final_success),
                    r.iterations_to_threshold.map_or("NA".into(), |i| i.to_string()),
                    r.final_nodes.to_string(),
                    r.final_edges.to_string(),
                ]
            })
            .collect();
        let success: Vec<f64> = self.runs.iter().map(|r| r.final_success).collect();
        let reached: Vec<f64> = self.runs.iter().filter_map(|r| r.iterations_to_threshold.map(|i| i as f64)).collect();
        let nodes: Vec<f64> = self.runs.iter().map(|r| r.final_nodes as f64).collect();
        let edges: Vec<f64> = self.runs.iter().map(|r| r.final_edges as f64).collect();
        let stats = [mean_std(&success), mean_std(&reached), mean_std(&nodes), mean_std(&edges)];
        rows.push(std::iter::once("mean".to_owned()).chain(stats.iter().map(|s| num(s.0))).collect());
        rows.push(std::iter::once("std".to_owned()).chain(stats.iter().map(|s| num(s.1))).collect());
        render(&self.header(None), &cols, &rows)
    }

    pub fn final_successes(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_success).collect()
    }

    pub fn median_final_success(&self) -> f64 {
        median(&self.final_successes())
    }

    pub fn median_iterations_to_threshold(&self) -> f64 {
        let cap = self.config.iterations;
        median(&self.runs.iter().map(|r| r.iterations_to_threshold_or(cap) as f64).collect::<Vec<_>>())
    }

    /// Writes every artifact next to `prefix` and returns the paths written.
    pub fn write(&self, prefix: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for run in &self.runs {
            files.push((suffixed(prefix, &format!("_seed{}.csv", run.seed)), self.metrics_csv(run)?));
            files.push((suffixed(prefix, &format!("_timing_seed{}.csv", run.seed)), self.timing_csv(run)?));
        }
        files.push((suffixed(prefix, "_curve.csv"), self.curve_csv()?));
        files.push((suffixed(prefix, "_summary.csv"), self.summary_csv()?));
        write_all(files)
    }
}

/// `prefix` with `suffix` appended to its final component.
pub fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(crate) fn write_all(files: Vec<(PathBuf, String)>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::with_capacity(files.len());
    for (path, text) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| GepoError::io(dir, e))?;
        }
        std::fs::write(&path, text).map_err(|e| GepoError::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

/// A rendered comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &str) -> Result<String> {
        let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        render(header, &cols, &self.rows)
    }

    /// Column-aligned plain text for terminals.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_owned()
        };
        let mut out = line(&self.columns);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    num(x)
}
