//! Self-normalized importance sampling over prior draws.

use alloc::vec::Vec;

use crate::env::{Design, Environment, Latents, Observation, PublicContext};
use crate::prob::special::log_sum_exp;
use crate::prob::RngState;

/// Weighted prior draws approximating `p(θ | history)`.
#[derive(Clone, Debug)]
pub struct ParticleSet {
    particles: Vec<Latents>,
    /// Normalized: `Σ exp(w) = 1`.
    log_weights: Vec<f64>,
    /// Set when every particle had zero likelihood and weights fell back to uniform.
    pub fallback: bool,
    cumulative: Vec<f64>,
}

impl ParticleSet {
    /// `n` prior draws (keeping the observable setup of `context`) weighted by
    /// the likelihood of `history`.
    pub fn from_history(
        env: &dyn Environment,
        context: &Latents,
        history: &[(Design, Observation)],
        n: usize,
        rng: &mut RngState,
    ) -> Self {
        let n = n.max(1);
        let particles: Vec<Latents> = (0..n).map(|_| env.resample_hidden(context, rng)).collect();
        let log_w: Vec<f64> = particles
            .iter()
            .map(|p| history.iter().map(|(d, o)| env.log_likelihood(p, d, &o.outcome)).sum())
            .collect();
        Self::from_weighted(particles, log_w)
    }

    /// As [`ParticleSet::from_history`] for an agent that only knows the
    /// public context.
    pub fn from_public(
        env: &dyn Environment,
        public: &PublicContext,
        history: &[(Design, Observation)],
        n: usize,
        rng: &mut RngState,
    ) -> Self {
        let particles: Vec<Latents> = (0..n.max(1)).map(|_| env.prior_given_public(public, rng)).collect();
        let log_w: Vec<f64> = particles
            .iter()
            .map(|p| history.iter().map(|(d, o)| env.log_likelihood(p, d, &o.outcome)).sum())
            .collect();
        Self::from_weighted(particles, log_w)
    }

    /// Normalizes arbitrary log weights. All `-inf` falls back to uniform.
    pub fn from_weighted(particles: Vec<Latents>, log_w: Vec<f64>) -> Self {
        assert_eq!(particles.len(), log_w.len());
        assert!(!particles.is_empty(), "particle set must not be empty");
        let total = log_sum_exp(&log_w);
        let (log_weights, fallback) = if total == f64::NEG_INFINITY || total.is_nan() {
            let u = -libm::log(particles.len() as f64);
            (alloc::vec![u; particles.len()], true)
        } else {
            (log_w.iter().map(|w| w - total).collect(), false)
        };
        let mut acc = 0.0;
        let cumulative = log_weights
            .iter()
            .map(|w| {
                acc += libm::exp(*w);
                acc
            })
            .collect();
        ParticleSet { particles, log_weights, fallback, cumulative }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Latents] {
        &self.particles
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(|w| libm::exp(*w))
    }

    /// Effective sample size `1 / Σ w²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights().map(|w| w * w).sum::<f64>()
    }

    /// One particle drawn in proportion to its weight.
    pub fn sample(&self, rng: &mut RngState) -> &Latents {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.uniform() * total;
        let i = self.cumulative.partition_point(|c| *c < u).min(self.particles.len() - 1);
        &self.particles[i]
    }

    /// Weighted mean of a per-particle vector function.
    pub fn mean_of(&self, mut f: impl FnMut(&Latents) -> Vec<f64>) -> Vec<f64> {
        let mut acc: Vec<f64> = Vec::new();
        for (p, w) in self.particles.iter().zip(self.weights()) {
            if w == 0.0 {
                continue;
            }
            let v = f(p);
            if acc.is_empty() {
                acc = alloc::vec![0.0; v.len()];
            }
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        acc
    }
}
