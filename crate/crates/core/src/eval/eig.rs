//! Expected information gain of a single design.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::particles::ParticleSet;
use super::EvalError;
use crate::env::{Design, EnvConfig, Environment, Latents, Outcome};
use crate::num::{mean, std_error, Real};
use crate::prob::special::{entropy, log_sum_exp};
use crate::prob::RngState;

/// Log inner-average floor, `ln exp(−700)`.
const LOG_FLOOR: f64 = -700.0;

/// Largest outcome support [`eig_oracle_small`] enumerates.
pub const MAX_ORACLE_SUPPORT: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigParams {
    pub n_outer: usize,
    pub m_inner: usize,
}

impl Default for EigParams {
    fn default() -> Self {
        EigParams { n_outer: 1000, m_inner: 1000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigEstimator {
    /// Nested Monte Carlo with fresh inner samples per outer sample.
    Nmc,
    /// For noiseless simulators: `ln((M+1)/(1+#matches))` against a shared
    /// pool of `M` latent draws, which includes the outer draw itself.
    Contrastive,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigEstimate {
    /// Nats.
    #[serde_as(as = "Real")]
    pub value: f64,
    pub n_outer: usize,
    pub m_inner: usize,
    #[serde_as(as = "Real")]
    pub std_error: f64,
    /// Some inner average underflowed and was floored.
    pub degenerate: bool,
    pub estimator: EigEstimator,
}

/// Where latent draws come from.
#[derive(Clone, Copy, Debug)]
pub enum LatentSource<'a> {
    /// The prior; observable setup is copied from `context` when given.
    Prior { context: Option<&'a Latents> },
    /// A weighted posterior approximation.
    Particles(&'a ParticleSet),
}

impl LatentSource<'_> {
    pub fn draw(&self, env: &dyn Environment, rng: &mut RngState) -> Latents {
        match self {
            LatentSource::Prior { context: Some(c) } => env.resample_hidden(c, rng),
            LatentSource::Prior { context: None } => env.sample_latents(rng),
            LatentSource::Particles(p) => p.sample(rng).clone(),
        }
    }
}

/// Prior NMC estimate with `n_outer` outer and `m_inner` inner samples.
pub fn eig_nmc(
    config: &EnvConfig,
    design: &Design,
    n_outer: usize,
    m_inner: usize,
    rng: &RngState,
) -> Result<EigEstimate, EvalError> {
    eig_nmc_with(config, design, EigParams { n_outer, m_inner }, LatentSource::Prior { context: None }, rng)
}

/// EIG under any latent source. Outer sample `n` draws from substream
/// `outer:n` of `rng`, so the estimate is a pure function of its inputs.
/// Noiseless simulators use the contrastive estimator.
pub fn eig_nmc_with(
    config: &EnvConfig,
    design: &Design,
    params: EigParams,
    source: LatentSource<'_>,
    rng: &RngState,
) -> Result<EigEstimate, EvalError> {
    if params.n_outer == 0 || params.m_inner == 0 {
        return Err(EvalError::InvalidParams("n_outer and m_inner must be at least 1"));
    }
    config.validate()?;
    let env = config.env();
    env.check_design(design).map_err(EvalError::InvalidDesign)?;
    if env.is_deterministic() {
        return Ok(contrastive(env, design, params, source, rng));
    }
    let ln_m = libm::log(params.m_inner as f64);
    let mut degenerate = false;
    let mut terms = Vec::with_capacity(params.n_outer);
    let mut inner = Vec::with_capacity(params.m_inner);
    for n in 0..params.n_outer {
        let mut r = rng.substream("outer", n as u64);
        let theta0 = source.draw(env, &mut r);
        let y = env.simulate(&theta0, design, &mut r);
        let l0 = env.log_likelihood(&theta0, design, &y);
        inner.clear();
        for _ in 0..params.m_inner {
            let th = source.draw(env, &mut r);
            inner.push(env.log_likelihood(&th, design, &y));
        }
        let mut log_avg = log_sum_exp(&inner) - ln_m;
        if !(log_avg >= LOG_FLOOR) {
            log_avg = LOG_FLOOR;
            degenerate = true;
        }
        terms.push(l0 - log_avg);
    }
    Ok(EigEstimate {
        value: mean(&terms),
        n_outer: params.n_outer,
        m_inner: params.m_inner,
        std_error: std_error(&terms),
        degenerate,
        estimator: EigEstimator::Nmc,
    })
}

fn contrastive(
    env: &dyn Environment,
    design: &Design,
    params: EigParams,
    source: LatentSource<'_>,
    rng: &RngState,
) -> EigEstimate {
    let mut pool_rng = rng.substream("pool", 0);
    let pool: Vec<Outcome> = (0..params.m_inner)
        .map(|_| {
            let th = source.draw(env, &mut pool_rng);
            env.simulate(&th, design, &mut pool_rng)
        })
        .collect();
    let ln_m1 = libm::log((params.m_inner + 1) as f64);
    let terms: Vec<f64> = (0..params.n_outer)
        .map(|n| {
            let mut r = rng.substream("outer", n as u64);
            let theta0 = source.draw(env, &mut r);
            let y = env.simulate(&theta0, design, &mut r);
            let matches = pool.iter().filter(|o| **o == y).count();
            ln_m1 - libm::log((1 + matches) as f64)
        })
        .collect();
    EigEstimate {
        value: mean(&terms),
        n_outer: params.n_outer,
        m_inner: params.m_inner,
        std_error: std_error(&terms),
        degenerate: false,
        estimator: EigEstimator::Contrastive,
    }
}

/// Exact mutual information between a weighted latent grid and a finite
/// outcome, `H[Σ w p(y|θ)] − Σ w H[p(y|θ)]`.
pub fn eig_oracle_small(
    config: &EnvConfig,
    design: &Design,
    grid: &[(Latents, f64)],
) -> Result<f64, EvalError> {
    let env = config.env();
    env.check_design(design).map_err(EvalError::InvalidDesign)?;
    let support = env.outcome_support(design).ok_or(EvalError::NoFiniteSupport)?;
    eig_oracle_with_support(env, design, grid, &support)
}

/// As [`eig_oracle_small`] with an explicit outcome support.
pub fn eig_oracle_with_support(
    env: &dyn Environment,
    design: &Design,
    grid: &[(Latents, f64)],
    support: &[Outcome],
) -> Result<f64, EvalError> {
    if support.len() > MAX_ORACLE_SUPPORT {
        return Err(EvalError::SupportTooLarge { size: support.len(), limit: MAX_ORACLE_SUPPORT });
    }
    let total: f64 = grid.iter().map(|(_, w)| *w).sum();
    if grid.is_empty() || !(total > 0.0 && total.is_finite()) || grid.iter().any(|(_, w)| *w < 0.0) {
        return Err(EvalError::InvalidParams("grid weights must be nonnegative with a positive sum"));
    }
    let mut marginal = alloc::vec![0.0; support.len()];
    let mut cond_entropy = 0.0;
    let mut probs = alloc::vec![0.0; support.len()];
    for (theta, w) in grid {
        let w = w / total;
        for (p, y) in probs.iter_mut().zip(support) {
            *p = libm::exp(env.log_likelihood(theta, design, y));
        }
        cond_entropy += w * entropy(&probs);
        for (m, p) in marginal.iter_mut().zip(&probs) {
            *m += w * p;
        }
    }
    Ok((entropy(&marginal) - cond_entropy).max(0.0))
}
