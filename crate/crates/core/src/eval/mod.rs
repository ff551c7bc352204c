//! Scoring: expected information gain of designs, EI regret and
//! prior-predictive standardized prediction error.

use alloc::string::String;

use thiserror::Error;

use crate::env::{ConfigError, Rejection};

mod eig;
mod particles;
mod regret;
mod standardize;

pub use eig::{
    eig_nmc, eig_nmc_with, eig_oracle_small, eig_oracle_with_support, EigEstimate, EigEstimator, EigParams, LatentSource,
    MAX_ORACLE_SUPPORT,
};
pub use particles::ParticleSet;
pub use regret::{design_eig, ei_regret, ei_regret_against, RegretReport};
pub use standardize::{prior_predictive_stats, standardized_error, PriorPredictiveStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid design: {0}")]
    InvalidDesign(Rejection),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("outcome support has {size} points, more than the limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("outcome support is not finite for this design")]
    NoFiniteSupport,
    #[error("invalid estimator settings: {0}")]
    InvalidParams(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("prior-predictive error spread is zero")]
    DegenerateStats,
}
