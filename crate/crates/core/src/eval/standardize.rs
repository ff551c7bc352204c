//! Prior-predictive statistics and standardized prediction error.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::EvalError;
use crate::env::{EnvConfig, GoalSpec, QueryInput, TargetKind, Value};
use crate::num::{mean, sample_std, Real};
use crate::prob::RngState;

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorPredictiveStats {
    /// Mean simulated goal outcome.
    pub mu0: Value,
    /// Sample standard deviation of the error of predicting `mu0`.
    #[serde_as(as = "Real")]
    pub sigma0: f64,
    pub n_samples: usize,
}

/// Draws `n_samples` (latents, query) pairs from the prior on substream
/// `prior_predictive:0`, simulates the goal outcome of each, and summarizes.
pub fn prior_predictive_stats(
    config: &EnvConfig,
    goal: &GoalSpec,
    n_samples: usize,
    rng: &RngState,
) -> Result<PriorPredictiveStats, EvalError> {
    if n_samples < 2 {
        return Err(EvalError::InvalidParams("n_samples must be at least 2"));
    }
    config.validate()?;
    let env = config.env();
    let mut r = rng.substream("prior_predictive", 0);
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let theta = env.sample_latents(&mut r);
        let input = match goal.target {
            TargetKind::Latent => QueryInput::Latent,
            _ => env.query_input(goal.goal, &theta, &mut r),
        };
        ys.push(env.sample_target(goal.goal, &theta, &input, &mut r).as_slice().to_vec());
    }
    let mut mu = alloc::vec![0.0; goal.arity];
    for y in &ys {
        if y.len() != goal.arity {
            return Err(EvalError::ShapeMismatch(format!("simulated outcome has {} values", y.len())));
        }
        for (m, v) in mu.iter_mut().zip(y) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n_samples as f64);
    let mu0 = Value::from_vec(mu.clone(), goal.is_vector());
    let errs: Vec<f64> = ys
        .iter()
        .map(|y| goal.error_fn.apply(&mu, y).expect("shapes checked"))
        .collect();
    let sigma0 = sample_std(&errs);
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(EvalError::DegenerateStats);
    }
    Ok(PriorPredictiveStats { mu0, sigma0, n_samples })
}

/// `mean_i (f(ŷ_i, y_i) − f(μ₀, y_i)) / σ₀`.
pub fn standardized_error(
    goal: &GoalSpec,
    preds: &[Value],
    truths: &[Value],
    stats: &PriorPredictiveStats,
) -> Result<f64, EvalError> {
    if preds.is_empty() || preds.len() != truths.len() {
        return Err(EvalError::ShapeMismatch(format!(
            "{} predictions for {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let mut terms = Vec::with_capacity(preds.len());
    for (p, t) in preds.iter().zip(truths) {
        let e = goal.error(p, t).map_err(EvalError::ShapeMismatch)?;
        let e0 = goal.error(&stats.mu0, t).map_err(EvalError::ShapeMismatch)?;
        terms.push((e - e0) / stats.sigma0);
    }
    Ok(mean(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvId, GoalId};

    #[test]
    fn mu0_predictions_score_zero() {
        let cfg = EnvConfig::default_for(EnvId::Dugongs);
        let g = GoalSpec::new(&cfg, GoalId::Length).unwrap();
        let s = prior_predictive_stats(&cfg, &g, 500, &RngState::new(1)).unwrap();
        let truths = [Value::Scalar(1.0), Value::Scalar(2.3), Value::Scalar(0.2)];
        let preds = [s.mu0.clone(), s.mu0.clone(), s.mu0.clone()];
        assert_eq!(standardized_error(&g, &preds, &truths, &s).unwrap(), 0.0);
        let perfect = standardized_error(&g, &truths, &truths, &s).unwrap();
        assert!(perfect <= 0.0);
        assert_eq!(s, prior_predictive_stats(&cfg, &g, 500, &RngState::new(1)).unwrap());
        assert!(standardized_error(&g, &preds[..2], &truths, &s).is_err());
    }
}
