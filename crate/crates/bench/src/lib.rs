//! Shared fixtures for the benchmarks.

use coopcache_core::controllers::{ControlMode, Learner, Objective};
use coopcache_core::env::Environment;
use coopcache_core::experiment::{ExperimentConfig, Preset};

/// The desk-scale preset with the given control mode.
pub fn tiny(mode: ControlMode) -> (ExperimentConfig, Environment, Learner) {
    let config = Preset::Tiny.config();
    fixture(config, mode)
}

/// The full-scale preset with the given control mode.
pub fn paper(mode: ControlMode) -> (ExperimentConfig, Environment, Learner) {
    fixture(Preset::PaperDefault.config(), mode)
}

fn fixture(config: ExperimentConfig, mode: ControlMode) -> (ExperimentConfig, Environment, Learner) {
    let net = config.network_config();
    let env = Environment::new(net.clone(), &config.popularity, 1).expect("valid preset");
    let learner = Learner::new(mode, Objective::Homotopy, config.learner.clone(), &net, 1)
        .expect("valid preset");
    (config, env, learner)
}
