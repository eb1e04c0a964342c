//! Multi-agent cooperative coded cache updating for small-cell networks.
//!
//! The crate bundles a seeded network simulator ([`env`]), a small dense
//! network library with analytic gradients ([`nn`]), the homotopy DDPG
//! learner ([`hddpg`]), centralized and decentralized control loops
//! ([`controllers`]), optimization and random baselines ([`baselines`]), and
//! the experiment runner behind the command-line tool ([`experiment`]).

pub mod baselines;
pub mod controllers;
pub mod env;
pub mod experiment;
pub mod hddpg;
pub mod error;
pub mod kv;
pub mod nn;

pub use error::{Error, Result};
