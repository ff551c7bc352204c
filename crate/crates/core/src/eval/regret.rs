//! EI regret: best EIG among random designs minus the mean EIG of chosen designs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::eig::{eig_nmc_with, EigEstimate, EigParams, LatentSource};
use super::EvalError;
use crate::env::{Design, EnvConfig};
use crate::num::{mean, Real};
use crate::prob::RngState;

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    #[serde_as(as = "Real")]
    pub regret: f64,
    #[serde_as(as = "Real")]
    pub best_random: f64,
    #[serde_as(as = "Real")]
    pub mean_chosen: f64,
    pub chosen: Vec<EigEstimate>,
    pub random: Vec<EigEstimate>,
    /// Random designs left out of the maximum because their estimate was floored.
    pub excluded: usize,
}

impl RegretReport {
    /// Combines precomputed estimates. Floored random estimates are skipped
    /// unless every one of them is floored.
    pub fn from_estimates(chosen: Vec<EigEstimate>, random: Vec<EigEstimate>) -> Result<Self, EvalError> {
        if chosen.is_empty() || random.is_empty() {
            return Err(EvalError::InvalidParams("need at least one chosen and one random design"));
        }
        let clean: Vec<f64> = random.iter().filter(|e| !e.degenerate).map(|e| e.value).collect();
        let excluded = random.len() - clean.len();
        let pool: Vec<f64> = if clean.is_empty() { random.iter().map(|e| e.value).collect() } else { clean };
        let best_random = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_chosen = mean(&chosen.iter().map(|e| e.value).collect::<Vec<_>>());
        Ok(RegretReport { regret: best_random - mean_chosen, best_random, mean_chosen, chosen, random, excluded })
    }
}

/// EIG of one design on its own substream `eig:<fingerprint>`, so the value
/// does not depend on which list the design appears in or where.
pub fn design_eig(
    config: &EnvConfig,
    design: &Design,
    params: EigParams,
    source: LatentSource<'_>,
    rng: &RngState,
) -> Result<EigEstimate, EvalError> {
    eig_nmc_with(config, design, params, source, &rng.substream("eig", design.fingerprint()))
}

/// Regret against `n_random` designs drawn from substream `random_designs:0`.
pub fn ei_regret(
    config: &EnvConfig,
    chosen: &[Design],
    n_random: usize,
    params: EigParams,
    source: LatentSource<'_>,
    rng: &RngState,
) -> Result<RegretReport, EvalError> {
    if n_random == 0 {
        return Err(EvalError::InvalidParams("n_random must be at least 1"));
    }
    let mut r = rng.substream("random_designs", 0);
    let random: Vec<Design> = (0..n_random).map(|_| config.env().random_design(&mut r)).collect();
    ei_regret_against(config, chosen, &random, params, source, rng)
}

/// Regret against an explicit list of comparison designs.
pub fn ei_regret_against(
    config: &EnvConfig,
    chosen: &[Design],
    random: &[Design],
    params: EigParams,
    source: LatentSource<'_>,
    rng: &RngState,
) -> Result<RegretReport, EvalError> {
    let est = |ds: &[Design]| -> Result<Vec<EigEstimate>, EvalError> {
        ds.iter().map(|d| design_eig(config, d, params, source, rng)).collect()
    };
    RegretReport::from_estimates(est(chosen)?, est(random)?)
}
