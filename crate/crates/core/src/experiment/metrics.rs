use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::{EpochRecord, Phase};
use crate::error::{Error, Result};

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: u64,
    pub phase: Phase,
    pub reward: f64,
    pub homotopy_reward: f64,
    pub lambda: f64,
    pub beta: f64,
    pub update_cost: f64,
    pub miss_cost: f64,
    pub num_users: usize,
    pub meter: u64,
    pub meter_worst_case: u64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub critic_loss: Option<f64>,
    pub actor_grad_norm: Option<f64>,
    pub action_violation: f64,
    /// Trailing mean reward within the current phase.
    pub moving_average: f64,
}

/// Trailing mean and population standard deviation over at most `window`
/// values. Positions before a full window average the available prefix.
pub fn windowed_stats(values: &[f64], window: usize) -> Vec<(f64, f64)> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let (mut sum, mut sq) = (0.0, 0.0);
    for (t, &v) in values.iter().enumerate() {
        sum += v;
        sq += v * v;
        if t >= window {
            let old = values[t - window];
            sum -= old;
            sq -= old * old;
        }
        let n = (t + 1).min(window) as f64;
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        out.push((mean, var.sqrt()));
    }
    out
}

/// Windowed statistics that restart whenever the phase changes.
fn phase_stats(phases: &[Phase], rewards: &[f64], window: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(rewards.len());
    let mut start = 0;
    while start < rewards.len() {
        let mut end = start + 1;
        while end < rewards.len() && phases[end] == phases[start] {
            end += 1;
        }
        out.extend(windowed_stats(&rewards[start..end], window));
        start = end;
    }
    out
}

/// Converts controller records into metrics rows, ordered by epoch.
pub fn metrics_rows(records: &[EpochRecord], window: usize) -> Vec<MetricsRow> {
    let phases: Vec<Phase> = records.iter().map(|r| r.phase).collect();
    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let stats = phase_stats(&phases, &rewards, window);
    records
        .iter()
        .zip(stats)
        .map(|(r, (avg, _))| MetricsRow {
            epoch: r.epoch,
            phase: r.phase,
            reward: r.reward,
            homotopy_reward: r.homotopy_reward,
            lambda: r.lambda,
            beta: r.beta,
            update_cost: r.update_cost,
            miss_cost: r.miss_cost,
            num_users: r.num_users,
            meter: r.meter.actual,
            meter_worst_case: r.meter.worst_case,
            actor_lr: r.actor_lr,
            critic_lr: r.critic_lr,
            critic_loss: r.critic_loss,
            actor_grad_norm: r.actor_grad_norm,
            action_violation: r.action_violation,
            moving_average: avg,
        })
        .collect()
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<MetricsRow>, _>>()?;
    if rows.windows(2).any(|w| w[1].epoch <= w[0].epoch) {
        return Err(Error::Metrics(format!(
            "{}: rows are not strictly ordered by epoch",
            path.display()
        )));
    }
    Ok(rows)
}

/// One point of an exported learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: u64,
    pub phase: Phase,
    pub moving_average: f64,
    pub std: f64,
}

/// Trailing reward mean and spread per row, restarting at phase changes.
pub fn learning_curve(rows: &[MetricsRow], window: usize) -> Result<Vec<CurvePoint>> {
    if rows.is_empty() {
        return Err(Error::Metrics("no metrics rows".into()));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let phases: Vec<Phase> = rows.iter().map(|r| r.phase).collect();
    let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
    Ok(rows
        .iter()
        .zip(phase_stats(&phases, &rewards, window))
        .map(|(r, (mean, std))| CurvePoint {
            epoch: r.epoch,
            phase: r.phase,
            moving_average: mean,
            std,
        })
        .collect())
}

/// Reads `metrics_path` and writes its learning curve to `out`.
pub fn export_learning_curve(metrics_path: &Path, window: usize, out: &Path) -> Result<Vec<CurvePoint>> {
    let rows = read_metrics(metrics_path)?;
    let curve = learning_curve(&rows, window)?;
    let mut w = csv::Writer::from_path(out)?;
    for p in &curve {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    Ok(curve)
}

/// Evaluation traffic of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTraffic {
    pub path: PathBuf,
    pub eval_epochs: usize,
    /// Mean of `-R` over the evaluation rows.
    pub mean_traffic: f64,
}

/// Mean evaluation traffic per run and pairwise relative differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunTraffic>,
    /// `(x - y) / y` in percent for row run `x` against column run `y`;
    /// `None` when `y` is zero and `x` is not.
    pub percent: Vec<Vec<Option<f64>>>,
}

pub fn percent_difference(x: f64, y: f64) -> Option<f64> {
    if y == 0.0 {
        return (x == 0.0).then_some(0.0);
    }
    Some(100.0 * (x - y) / y)
}

impl Comparison {
    /// Plain-text table with two-decimal percentages.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.runs.iter().enumerate() {
            let _ = writeln!(
                s,
                "[{i}] {}  eval_epochs={}  mean_traffic={:.6}",
                r.path.display(),
                r.eval_epochs,
                r.mean_traffic
            );
        }
        let _ = write!(s, "\n{:>6}", "");
        for j in 0..self.runs.len() {
            let _ = write!(s, "{:>10}", format!("[{j}]"));
        }
        s.push('\n');
        for (i, row) in self.percent.iter().enumerate() {
            let _ = write!(s, "{:>6}", format!("[{i}]"));
            for p in row {
                let cell = p.map_or_else(|| "inf".to_owned(), |v| format!("{v:.2}%"));
                let _ = write!(s, "{cell:>10}");
            }
            s.push('\n');
        }
        s
    }
}

/// Compares evaluation traffic across runs with identical eval schedules.
pub fn compare_runs(paths: &[PathBuf]) -> Result<Comparison> {
    if paths.len() < 2 {
        return Err(Error::InvalidArgument("compare needs at least two runs".into()));
    }
    let mut runs = Vec::with_capacity(paths.len());
    for path in paths {
        let eval: Vec<MetricsRow> = read_metrics(path)?
            .into_iter()
            .filter(|r| r.phase == Phase::Eval)
            .collect();
        if eval.is_empty() {
            return Err(Error::Metrics(format!("{}: no evaluation rows", path.display())));
        }
        let mean = -eval.iter().map(|r| r.reward).sum::<f64>() / eval.len() as f64;
        runs.push(RunTraffic {
            path: path.clone(),
            eval_epochs: eval.len(),
            mean_traffic: mean,
        });
    }
    let first = &runs[0];
    if let Some(bad) = runs
        .iter()
        .find(|r| r.eval_epochs != first.eval_epochs)
    {
        return Err(Error::Metrics(format!(
            "evaluation schedules differ: {} has {} eval epochs, {} has {}",
            first.path.display(),
            first.eval_epochs,
            bad.path.display(),
            bad.eval_epochs
        )));
    }
    let percent = runs
        .iter()
        .map(|x| {
            runs.iter()
                .map(|y| percent_difference(x.mean_traffic, y.mean_traffic))
                .collect()
        })
        .collect();
    Ok(Comparison { runs, percent })
}
