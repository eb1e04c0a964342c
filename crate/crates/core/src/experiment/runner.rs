use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::controllers::{BaselinePolicy, Controller, EpochRecord, EvalSummary, Learner, Phase};
use crate::env::Environment;
use crate::error::{Error, Result};

use super::config::{ExperimentConfig, RunMode};
use super::metrics::{metrics_rows, write_metrics};

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";

const MANIFEST_FORMAT: &str = "coopcache-run v1";

/// Machine-readable description of a finished run. Contains no timestamps
/// or host details so that repeated runs produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub mode: RunMode,
    pub seed: u64,
    pub rows: usize,
    pub eval: EvalSummary,
    pub files: Vec<&'static str>,
    pub config: ExperimentConfig,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<EpochRecord>,
    pub eval: EvalSummary,
    pub metrics_path: PathBuf,
    pub manifest_path: PathBuf,
    pub checkpoint_path: Option<PathBuf>,
    /// The trained learner; `None` for baselines.
    pub learner: Option<Learner>,
}

impl RunReport {
    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }
}

/// Trains (learners only), then evaluates greedily, then writes metrics,
/// manifest and, for learners, the final checkpoint into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    config.validate()?;
    let net = config.network_config();
    let mut env = Environment::new(net.clone(), &config.popularity, config.seed)?;
    let mut records = Vec::new();
    let learner = match config.mode {
        RunMode::Learner(mode, objective) => {
            let mut learner =
                Learner::new(mode, objective, config.learner.clone(), &net, config.seed)?;
            if config.learner.warmup {
                records.extend(learner.warmup(&mut env)?);
            }
            for _ in 0..config.train_epochs {
                records.push(learner.train_epoch(&mut env)?);
            }
            for _ in 0..config.eval_epochs {
                records.push(learner.eval_epoch(&mut env)?);
            }
            Some(learner)
        }
        RunMode::Baseline(kind) => {
            let mut c = Controller::Baseline(BaselinePolicy::new(kind, config.seed));
            for _ in 0..config.eval_epochs {
                records.push(c.run_epoch(&mut env, Phase::Eval)?);
            }
            None
        }
    };
    finish(config, "train", out, records, learner)
}

/// Greedy evaluation of a saved learner on a fresh environment built from
/// `config`; the learner is not updated.
pub fn evaluate_checkpoint(
    config: &ExperimentConfig,
    checkpoint: &Path,
    out: &Path,
) -> Result<RunReport> {
    config.validate()?;
    let text = std::fs::read_to_string(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let learner = Learner::from_checkpoint(&text)?;
    let mut config = config.clone();
    config.mode = RunMode::Learner(learner.mode(), learner.objective());
    config.learner = learner.config().clone();
    let net = config.network_config();
    let mut env = Environment::new(net, &config.popularity, config.seed)?;
    let mut c = Controller::Learner(Box::new(learner));
    let records = (0..config.eval_epochs)
        .map(|_| c.run_epoch(&mut env, Phase::Eval))
        .collect::<Result<Vec<_>>>()?;
    let Controller::Learner(learner) = c else {
        unreachable!()
    };
    let mut report = finish(&config, "eval", out, records, None)?;
    report.learner = Some(*learner);
    Ok(report)
}

fn finish(
    config: &ExperimentConfig,
    command: &'static str,
    out: &Path,
    records: Vec<EpochRecord>,
    learner: Option<Learner>,
) -> Result<RunReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let metrics_path = out.join(METRICS_FILE);
    write_metrics(&metrics_path, &metrics_rows(&records, config.window))?;

    let mut files = vec![METRICS_FILE, MANIFEST_FILE];
    let checkpoint_path = match (&learner, command) {
        (Some(l), "train") => {
            let path = out.join(CHECKPOINT_FILE);
            std::fs::write(&path, l.to_checkpoint()).map_err(|e| Error::io(&path, e))?;
            files.push(CHECKPOINT_FILE);
            Some(path)
        }
        _ => None,
    };

    let eval_records: Vec<EpochRecord> = records
        .iter()
        .filter(|r| r.phase == Phase::Eval)
        .cloned()
        .collect();
    let eval = EvalSummary::from_records(&eval_records);
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        version: env!("CARGO_PKG_VERSION"),
        command,
        mode: config.mode,
        seed: config.seed,
        rows: records.len(),
        eval: eval.clone(),
        files,
        config: config.clone(),
    };
    let manifest_path = out.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(RunReport {
        records,
        eval,
        metrics_path,
        manifest_path,
        checkpoint_path,
        learner,
    })
}
