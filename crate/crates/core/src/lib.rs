//! Simulation and scoring engine for agents that design experiments.
//!
//! The crate is `no_std` (with `alloc`) and has no IO: every environment,
//! estimator and trial runner here is a deterministic function of its
//! configuration and a seed plan. Transports, file formats and the
//! command-line surface live in the `discobench` crate.
//!
//! Layout:
//!
//! - [`prob`]: seedable substreams, elementary distributions, special functions.
//! - [`env`]: the ten generative environments behind [`env::Environment`].
//! - [`eval`]: expected information gain, EI regret, prior-predictive
//!   standardized error.
//! - [`harness`]: trial and discovery sessions, scripted agents, records.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod env;
pub mod eval;
pub mod harness;
pub mod num;
pub mod prob;

pub use env::{Design, EnvConfig, EnvId, Environment, EpisodeState, GoalId, Observation, Outcome};
pub use prob::{DistributionSpec, RngState};
