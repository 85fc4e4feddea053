use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use gepo::env::{Environment, NUM_ACTIONS};
use gepo::graph::{compute_centralities, export_graph, EmbeddingProvider, IdentityEmbedder};
use gepo::harness::{ablation_suite, compare, run_experiment, AblationSwitches, ExperimentConfig, RunState};
use gepo::{Algorithm, CentralityMetric, GepoError};

fn small(layout: &str) -> ExperimentConfig {
    ExperimentConfig {
        layout: layout.into(),
        rollouts: 4,
        iterations: 6,
        seeds: vec![1, 2],
        eval_episodes: 3,
        ..Default::default()
    }
}

/// Exact-text provider that starts returning invalid vectors once its call
/// budget is spent.
struct Budgeted(Arc<AtomicI64>);

impl EmbeddingProvider<f64> for Budgeted {
    fn embed(&self, text: &str) -> Vec<f64> {
        if self.0.fetch_sub(1, Ordering::SeqCst) <= 0 {
            return vec![0.0; 8];
        }
        EmbeddingProvider::<f64>::embed(&IdentityEmbedder, text)
    }
    fn merges(&self) -> bool {
        false
    }
    fn name(&self) -> &'static str {
        "budgeted"
    }
}

fn fingerprint(run: &RunState<f64>) -> (u64, usize, usize, String, gepo::Policy) {
    let scores = compute_centralities(&run.graph, CentralityMetric::Degree, true).unwrap();
    (
        run.graph.revision(),
        run.graph.vertex_count(),
        run.iteration,
        export_graph(&run.graph, &scores).unwrap(),
        run.params.clone(),
    )
}

#[test]
fn failed_iteration_leaves_state_untouched() {
    let cfg = small("bottleneck");
    let mut failures = 0;
    for budget in 0..12 {
        let calls = Arc::new(AtomicI64::new(i64::MAX));
        let mut run = RunState::with_embedder(&cfg, 5, Box::new(Budgeted(calls.clone()))).unwrap();
        run.training_iteration().unwrap();
        run.training_iteration().unwrap();
        let before = fingerprint(&run);
        calls.store(budget, Ordering::SeqCst);
        match run.training_iteration() {
            Ok(_) => continue,
            Err(e) => {
                assert!(matches!(e, GepoError::InvalidEmbedding(_)), "{e}");
                failures += 1;
                assert_eq!(fingerprint(&run), before);
            }
        }
    }
    assert!(failures > 0);
}

#[test]
fn numeric_failure_is_atomic() {
    let mut cfg = small("bottleneck");
    cfg.optim.learning_rate = 1e306;
    cfg.optim.epochs_per_iter = 3;
    let mut run = RunState::<f64>::new(&cfg, 1).unwrap();
    let before = fingerprint(&run);
    let err = run.training_iteration().unwrap_err();
    assert!(matches!(err, GepoError::NumericFailure { .. }), "{err}");
    assert_eq!(fingerprint(&run), before);
}

#[test]
fn same_seed_same_bytes_and_workers_do_not_matter() {
    let cfg = small("two-keys");
    let a = run_experiment::<f64>(&cfg).unwrap();
    let b = run_experiment::<f64>(&cfg).unwrap();
    let par = run_experiment::<f64>(&ExperimentConfig { workers: 3, ..cfg.clone() }).unwrap();
    for i in 0..a.runs.len() {
        assert_eq!(a.metrics_csv(&a.runs[i]).unwrap(), b.metrics_csv(&b.runs[i]).unwrap());
        let strip = |s: String| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(a.metrics_csv(&a.runs[i]).unwrap()), strip(par.metrics_csv(&par.runs[i]).unwrap()));
    }
    assert_eq!(a.summary_csv().unwrap(), b.summary_csv().unwrap());
    assert_eq!(a.curve_csv().unwrap(), b.curve_csv().unwrap());
}

#[test]
fn phases_account_for_the_iteration() {
    let cfg = ExperimentConfig { iterations: 15, seeds: vec![3], ..small("two-keys") };
    let r = run_experiment::<f64>(&cfg).unwrap();
    let (mut phases, mut total) = (0.0, 0.0);
    for m in &r.runs[0].metrics {
        let t = &m.timings;
        assert!([t.rollout, t.graph_update, t.centrality, t.advantage, t.update, t.total].iter().all(|&x| x >= 0.0));
        assert!(t.phase_sum() <= t.total);
        phases += t.phase_sum();
        total += t.total;
    }
    assert!(phases >= 0.95 * total, "phases {phases} of {total}");
}

#[test]
fn metrics_stay_in_range_and_graph_grows() {
    let r = run_experiment::<f64>(&small("two-keys")).unwrap();
    for run in &r.runs {
        for w in run.metrics.windows(2) {
            assert!(w[1].nodes >= w[0].nodes && w[1].edges >= w[0].edges);
        }
        for m in &run.metrics {
            assert!((0.0..=1.0).contains(&m.success_rate));
            assert!(m.mean_length > 0.0);
        }
    }
}

#[test]
fn compare_writes_aligned_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("bottleneck");
    let sweep = compare::<f64>(&cfg, &[Algorithm::Gepo, Algorithm::Grpo]).unwrap();
    assert_eq!(sweep.table.rows.len(), 2);
    let mut curves = Vec::new();
    for (label, r) in &sweep.results {
        let prefix = dir.path().join(label);
        let files = r.write(&prefix).unwrap();
        assert!(files.iter().any(|p| p.ends_with(format!("{label}_summary.csv"))));
        let curve = std::fs::read_to_string(dir.path().join(format!("{label}_curve.csv"))).unwrap();
        let axis: Vec<String> =
            curve.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').next().unwrap().to_owned()).collect();
        curves.push(axis);
    }
    assert_eq!(curves[0], curves[1]);
    assert_eq!(curves[0].len(), cfg.iterations + 1);
}

#[test]
fn pretrained_corridor_policy_always_succeeds() {
    let cfg = ExperimentConfig { layout: "corridor".into(), rollouts: 2, ..Default::default() };
    let mut run = RunState::<f64>::new(&cfg, 1).unwrap();
    let mut env = Environment::new(Arc::new(run.layout().clone()));
    let mut obs = env.reset(0).text;
    let right = 3;
    let embedder = cfg.embedder.build::<f64>();
    while !env.is_done() {
        let k = run.graph.map_state(&obs, embedder.as_ref(), 0.9).unwrap();
        let mut logits = vec![0.0; NUM_ACTIONS];
        logits[right] = 40.0;
        run.params.set_logits(k, logits);
        obs = env.step(right).unwrap().observation.text;
    }
    assert!(env.state().steps_elapsed < cfg.horizon.unwrap_or(40));
    let m = run.training_iteration().unwrap();
    assert_eq!(m.success_rate, 1.0);
}

#[test]
fn f32_runs_end_to_end() {
    let r = run_experiment::<f32>(&ExperimentConfig { seeds: vec![1], ..small("bottleneck") }).unwrap();
    assert_eq!(r.runs[0].metrics.len(), 6);
    assert!(r.runs[0].metrics.iter().all(|m| m.loss.is_finite()));
}

#[test]
fn ablation_suite_has_seven_rows_with_switches_in_headers() {
    let cfg = ExperimentConfig { iterations: 2, seeds: vec![1], ..small("bottleneck") };
    let s = ablation_suite::<f64>(&cfg).unwrap();
    assert_eq!(s.table.rows.len(), 7);
    for (label, r) in &s.results {
        let header: String = r.config.header().lines().map(|l| format!("{}\n", &l[2..])).collect();
        let back = ExperimentConfig::from_toml(&header).unwrap();
        assert_eq!(&back.ablation.label(), label);
    }
    assert!(s.get("full").is_some());
    assert_eq!(AblationSwitches::default().label(), "full");
}
