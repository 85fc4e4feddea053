//! Command-line front end for training runs, sweeps and graph exports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gepo::harness::{
    ablation_suite, centrality_sweep, compare, rollout_sweep, run_experiment, suffixed, train_and_export, SweepResult,
};
use gepo::{Aggregation, Algorithm, CentralityMetric, ExperimentConfig, GepoError, Result, Scalar};

#[derive(Parser)]
#[command(name = "gepo", version, about = "Graph-enhanced policy optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write per-seed, curve and summary CSVs.
    Train(Common),
    /// Train every seed and report only the final greedy evaluation.
    Eval(Common),
    /// Run several algorithms on identical seeds.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "gepo,grpo")]
        algorithms: Vec<Algorithm>,
    },
    /// Full model plus single and pairwise component ablations.
    Ablate(Common),
    /// Compare the four centrality metrics.
    CentralitySweep(Common),
    /// Vary the number of rollouts per iteration.
    RolloutSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", value_delimiter = ',', default_value = "2,4,8,16")]
        n_values: Vec<usize>,
    },
    /// Train the first seed and write the final graph as an edge list.
    GraphExport(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

/// Flags mirror the experiment config. A `--config` file is applied last and
/// wins over any flag.
#[derive(Args)]
struct Common {
    /// TOML config overlaid on top of the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog name (corridor, bottleneck, two-keys) or a layout file.
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    metric: Option<CentralityMetric>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    aggregation_mode: Option<Aggregation>,
    #[arg(long)]
    w_node: Option<f64>,
    #[arg(long)]
    w_edge: Option<f64>,
    #[arg(long)]
    w_gamma: Option<f64>,
    #[arg(long)]
    gamma_base: Option<f64>,
    #[arg(long)]
    w_struct: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    merge_threshold: Option<f64>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_intrinsic_reward: bool,
    #[arg(long)]
    no_aggregation: bool,
    #[arg(long)]
    no_dynamic_discount: bool,
    /// Output prefix; files are written as `<prefix>_*.csv`.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(
            layout => layout,
            algorithm => algorithm,
            rollouts => rollouts,
            iterations => iterations,
            seed => seeds,
            metric => metric,
            learning_rate => optim.learning_rate,
            epochs => optim.epochs_per_iter,
            w_node => shaping.w_node,
            w_edge => shaping.w_edge,
            w_gamma => shaping.w_gamma,
            gamma_base => shaping.gamma_base,
            w_struct => advantage.w_struct,
            lambda => advantage.lambda,
            merge_threshold => merge_threshold,
            eval_episodes => eval_episodes,
            workers => workers,
        );
        c.horizon = self.horizon.or(c.horizon);
        c.optim.aggregation = self.aggregation_mode.or(c.optim.aggregation);
        c.output = self.output.clone().or(c.output);
        c.ablation.intrinsic_reward &= !self.no_intrinsic_reward;
        c.ablation.aggregation &= !self.no_aggregation;
        c.ablation.dynamic_discount &= !self.no_dynamic_discount;
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| GepoError::io(path, e))?;
                c.overlay_toml(&text)
            }
            None => {
                c.validate()?;
                Ok(c)
            }
        }
    }
}

fn prefix(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("gepo_out/run"))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| GepoError::io(dir, e))?;
    }
    std::fs::write(&path, text).map_err(|e| GepoError::io(&path, e))?;
    Ok(path)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn sweep_out(cfg: &ExperimentConfig, name: &str, sweep: &SweepResult) -> Result<()> {
    let base = prefix(cfg);
    let mut paths = Vec::new();
    for (label, r) in &sweep.results {
        let tag: String = label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect();
        paths.extend(r.write(&suffixed(&base, &format!("_{name}_{tag}")))?);
    }
    paths.push(write(suffixed(&base, &format!("_{name}.csv")), &sweep.table.to_csv(&cfg.header())?)?);
    report(&paths);
    print!("{}", sweep.table.to_text());
    Ok(())
}

fn dispatch<T: Scalar>(command: &Command, common: &Common) -> Result<()> {
    let cfg = common.config()?;
    match command {
        Command::Train(_) => {
            let r = run_experiment::<T>(&cfg)?;
            report(&r.write(&prefix(&cfg))?);
            print!("{}", r.summary_csv()?.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n"));
            println!();
        }
        Command::Eval(_) => {
            let r = run_experiment::<T>(&cfg)?;
            let path = write(suffixed(&prefix(&cfg), "_summary.csv"), &r.summary_csv()?)?;
            report(&[path]);
            for run in &r.runs {
                println!("seed {} final_success {:.6}", run.seed, run.final_success);
            }
        }
        Command::Compare { algorithms, .. } => sweep_out(&cfg, "compare", &compare::<T>(&cfg, algorithms)?)?,
        Command::Ablate(_) => sweep_out(&cfg, "ablation", &ablation_suite::<T>(&cfg)?)?,
        Command::CentralitySweep(_) => sweep_out(&cfg, "centrality", &centrality_sweep::<T>(&cfg)?)?,
        Command::RolloutSweep { n_values, .. } => sweep_out(&cfg, "rollouts", &rollout_sweep::<T>(&cfg, n_values)?)?,
        Command::GraphExport(_) => {
            let text = train_and_export::<T>(&cfg)?;
            report(&[write(suffixed(&prefix(&cfg), "_graph.txt"), &text)?]);
        }
    }
    Ok(())
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Train(c)
        | Command::Eval(c)
        | Command::Ablate(c)
        | Command::CentralitySweep(c)
        | Command::GraphExport(c) => c,
        Command::Compare { common, .. } | Command::RolloutSweep { common, .. } => common,
    }
}

fn error_line(e: &GepoError) -> String {
    let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    format!("error kind={} message=\"{}\"", e.kind(), msg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = common(&cli.command);
    let result = match c.precision {
        Precision::F64 => dispatch::<f64>(&cli.command, c),
        Precision::F32 => dispatch::<f32>(&cli.command, c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(1)
        }
    }
}
