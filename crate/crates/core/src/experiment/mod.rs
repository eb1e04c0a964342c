//! Experiment orchestration: TOML configs merged onto shipped presets,
//! training and evaluation runs, metrics and manifest files, learning-curve
//! export and cross-run comparison.
//!
//! A run directory holds `metrics.csv` (one row per epoch, strictly ordered),
//! `manifest.json` (config echo, seed, evaluation summary) and, for learners,
//! `checkpoint.txt`. Given the same config and seed every file is
//! byte-identical across runs.

mod config;
mod metrics;
mod runner;

pub use config::{load_config, ExperimentConfig, NetworkSection, Preset, RunMode};
pub use metrics::{
    compare_runs, export_learning_curve, learning_curve, metrics_rows, percent_difference,
    read_metrics, windowed_stats, write_metrics, Comparison, CurvePoint, MetricsRow, RunTraffic,
};
pub use runner::{
    evaluate_checkpoint, run_experiment, Manifest, RunReport, CHECKPOINT_FILE, MANIFEST_FILE,
    METRICS_FILE,
};
