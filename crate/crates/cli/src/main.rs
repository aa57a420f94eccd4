//! `gauge-drift`: run drift-mitigation experiments and compare their outputs.
//!
//! Exit codes: 0 success, 1 invalid input (config, overrides, CSV files,
//! mismatched runs), 2 runtime failure (dimension cap, numerical errors, I/O
//! while writing results).

mod compare;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gauge_drift::{EngineError, Experiment};

use crate::config::{apply_override, load_table, ConfigError, RunConfig};
use crate::output::{
    read_steps, steps_csv, summary_csv, Manifest, MANIFEST_FILE, STEPS_FILE, SUMMARY_FILE,
};

#[derive(Parser)]
#[command(
    name = "gauge-drift",
    version,
    about = "Gauge-drift mitigation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble and write steps.csv, summary.csv and manifest.toml.
    Run(RunArgs),
    /// Merge two runs' steps.csv and report which kept higher survival.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or a manifest.toml from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    output: PathBuf,
    /// Override a config value, e.g. `mode=none` or `drift.amplitude=0.005`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    run_a: PathBuf,
    run_b: PathBuf,
    /// Write the merged CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::DimensionCap(_) => Failure::Runtime(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut table = load_table(&args.config)?;
    for o in &args.overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(n) = args.trajectories {
        apply_override(&mut table, &format!("trajectories={n}"))?;
    }
    let cfg = RunConfig::from_table(table, &args.config.display().to_string())?;
    let experiment = Experiment::new(cfg.experiment()?).map_err(|e| match e {
        EngineError::Invalid(m) => Failure::Input(format!("invalid config: {m}")),
        e => Failure::Runtime(e.to_string()),
    })?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let threads = pool.current_num_threads();

    let start = Instant::now();
    let stats = pool
        .install(|| experiment.run_ensemble())
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let duration = start.elapsed().as_secs_f64();

    let dir = &args.output;
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let label = experiment.config().mode.label();
    let steps_path = dir.join(STEPS_FILE);
    let summary_path = dir.join(SUMMARY_FILE);
    write(&steps_path, &steps_csv(&stats))?;
    write(&summary_path, &summary_csv(label, &stats))?;
    let manifest = Manifest {
        config: &cfg,
        duration_seconds: duration,
        threads,
        outputs: vec![steps_path.clone(), summary_path],
    };
    write(&dir.join(MANIFEST_FILE), &manifest.to_toml())?;

    let last = stats.steps() - 1;
    eprintln!(
        "{label}: {} trajectories x {} steps in {duration:.2}s, final survival {:.6} ± {:.2e}",
        stats.trajectories, cfg.steps, stats.mean_survival[last], stats.se_survival[last]
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let rows_a = read_steps(&args.run_a.join(STEPS_FILE)).map_err(Failure::Input)?;
    let rows_b = read_steps(&args.run_b.join(STEPS_FILE)).map_err(Failure::Input)?;
    let name_a = args.run_a.display().to_string();
    let name_b = args.run_b.display().to_string();
    let cmp = compare::compare(&name_a, &rows_a, &name_b, &rows_b).map_err(Failure::Input)?;
    match &args.output {
        Some(path) => {
            write(path, &cmp.csv)?;
            println!("{}", cmp.verdict);
        }
        None => {
            print!("{}", cmp.csv);
            eprintln!("{}", cmp.verdict);
        }
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}
