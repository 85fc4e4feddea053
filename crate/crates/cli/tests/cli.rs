use std::path::Path;
use std::process::{Command, Output};

fn gepo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gepo")).args(args).output().expect("binary runs")
}

fn quick<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--layout", "corridor", "--rollouts", "4", "--iterations", "3", "--eval-episodes", "2", "-o", out];
    v.extend_from_slice(extra);
    v
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn train_writes_per_seed_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("t");
    let out = gepo(&[&["train"][..], &quick(prefix.to_str().unwrap(), &["--seed", "4,9"])].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["t_seed4.csv", "t_seed9.csv", "t_timing_seed4.csv", "t_curve.csv", "t_summary.csv"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    let metrics = read(&dir.path().join("t_seed4.csv"));
    assert!(metrics.contains("# run_seed = 4"));
    assert!(metrics.contains("layout = \"corridor\""));
    let body: Vec<&str> = metrics.lines().filter(|l| !l.starts_with('#')).collect();
    // header, three iterations, final row
    assert_eq!(body.len(), 5);
}

#[test]
fn errors_are_one_line_with_a_kind() {
    let out = gepo(&["train", "--layout", "no-such-layout", "--iterations", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=config message=\""), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "rollouts = 2\n[optim]\nlearning_rate = 0.25\n").unwrap();
    let prefix = dir.path().join("c");
    let out = gepo(
        &[&["train"][..], &quick(prefix.to_str().unwrap(), &["--seed", "1", "--config", cfg.to_str().unwrap()])]
            .concat(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("c_seed1.csv"));
    assert!(text.contains("# rollouts = 2"), "{text}");
    assert!(text.contains("# learning_rate = 0.25"));
    // flags the file does not mention survive
    assert!(text.contains("# iterations = 3"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r");
    let args = [
        "train",
        "--layout",
        "bottleneck",
        "--rollouts",
        "4",
        "--iterations",
        "3",
        "--seed",
        "2",
        "-o",
        p.to_str().unwrap(),
    ];
    let snapshot = || {
        let out = gepo(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ["_seed2.csv", "_curve.csv", "_summary.csv"].map(|s| read(&dir.path().join(format!("r{s}"))))
    };
    let first = snapshot();
    assert_eq!(first, snapshot());
}

#[test]
fn graph_export_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("g");
    let p = prefix.to_str().unwrap();
    let out = gepo(&[&["graph-export"][..], &quick(p, &["--seed", "1"])].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let graph = read(&dir.path().join("g_graph.txt"));
    assert!(graph.lines().any(|l| l.starts_with("V ")));

    let out = gepo(&[&["compare"][..], &quick(p, &["--seed", "1", "--algorithms", "gepo,grpo,ppo"])].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(&dir.path().join("g_compare.csv"));
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("algorithm"));
}

#[test]
fn f32_precision_runs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("f");
    let out = gepo(&[&["eval"][..], &quick(prefix.to_str().unwrap(), &["--seed", "1", "--precision", "f32"])].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 1 final_success"));
}
