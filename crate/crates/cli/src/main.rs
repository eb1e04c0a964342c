//! `coopcache`: train, evaluate and compare cooperative cache-updating
//! controllers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coopcache_core::experiment::{
    compare_runs, evaluate_checkpoint, export_learning_curve, load_config, run_experiment,
    ExperimentConfig, Preset, RunMode, RunReport, METRICS_FILE,
};

#[derive(Parser)]
#[command(name = "coopcache", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learner (or run a baseline), then evaluate it greedily.
    Train(RunArgs),
    /// Evaluate a saved learner checkpoint, or a baseline, without training.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Learner checkpoint written by `train`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare mean evaluation traffic of two or more runs.
    Compare {
        /// Run directories or metrics files.
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
    },
    /// Write the moving-average learning curve of a run.
    ExportCurve {
        /// Run directory or metrics file.
        metrics: PathBuf,
        #[arg(long, default_value_t = 5000)]
        window: usize,
        /// Output file; defaults to `curve.csv` next to the metrics.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file merged onto the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "paper-default")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Learner mode or baseline name, e.g. centralized, fd-hddpg, co-cu.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let preset: Preset = self.preset.parse()?;
        let mut config = match &self.config {
            Some(path) => load_config(path, preset)?,
            None => preset.config(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(mode) = &self.mode {
            config.mode = mode.parse()?;
        }
        config.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", config.mode, config.seed)));
        Ok((config, out))
    }
}

fn metrics_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(METRICS_FILE)
    } else {
        p.to_path_buf()
    }
}

fn report(r: &RunReport) {
    let e = &r.eval;
    println!("rows: {}", r.records.len());
    if e.epochs > 0 {
        println!(
            "eval: {} epochs, mean reward {:.6}, mean traffic {:.6} (update {:.4}, miss {:.4}), fronthaul {}/{}",
            e.epochs,
            e.mean_reward,
            e.mean_traffic,
            e.mean_update_cost,
            e.mean_miss_cost,
            e.meter_total,
            e.meter_worst_case_total
        );
    }
    println!("metrics: {}", r.metrics_path.display());
    println!("manifest: {}", r.manifest_path.display());
    if let Some(p) = &r.checkpoint_path {
        println!("checkpoint: {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let (config, out) = args.resolve()?;
            let r = run_experiment(&config, &out)
                .with_context(|| format!("{} run failed", config.mode))?;
            report(&r);
        }
        Command::Eval { run, checkpoint } => {
            let (config, out) = run.resolve()?;
            let r = match (checkpoint, config.mode) {
                (Some(ckpt), _) => evaluate_checkpoint(&config, &ckpt, &out)?,
                (None, RunMode::Baseline(_)) => run_experiment(&config, &out)?,
                (None, mode) => bail!("evaluating learner mode `{mode}` needs --checkpoint"),
            };
            report(&r);
        }
        Command::Compare { runs } => {
            let paths: Vec<PathBuf> = runs.iter().map(|p| metrics_path(p)).collect();
            print!("{}", compare_runs(&paths)?.render());
        }
        Command::ExportCurve {
            metrics,
            window,
            out,
        } => {
            let metrics = metrics_path(&metrics);
            let out = out.unwrap_or_else(|| metrics.with_file_name("curve.csv"));
            let curve = export_learning_curve(&metrics, window, &out)?;
            println!("{} points -> {}", curve.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
