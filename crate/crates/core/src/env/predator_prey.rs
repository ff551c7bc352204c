//! Lotka-Volterra predator-prey dynamics, observed without noise.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;
use thiserror::Error;

use super::{
    check_prior, check_range, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::{DistributionSpec, RngState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("integration overflow: state exceeded {limit} at t = {time}")]
pub struct LvOverflow {
    pub time: f64,
    pub limit: f64,
}

fn deriv(p: &LvParams, s: [f64; 2]) -> [f64; 2] {
    let [x, y] = s;
    [p.alpha * x - p.beta * x * y, p.delta * x * y - p.gamma * y]
}

fn rk4_step(p: &LvParams, s: [f64; 2], h: f64) -> [f64; 2] {
    let add = |s: [f64; 2], k: [f64; 2], c: f64| [s[0] + c * k[0], s[1] + c * k[1]];
    let k1 = deriv(p, s);
    let k2 = deriv(p, add(s, k1, 0.5 * h));
    let k3 = deriv(p, add(s, k2, 0.5 * h));
    let k4 = deriv(p, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Fixed-step RK4 state at time `t`, before rounding. Whole steps of size
/// `h` are followed by one partial step for the remainder.
pub fn lv_integrate_real(p: &LvParams, init: [f64; 2], t: f64, h: f64, limit: f64) -> Result<[f64; 2], LvOverflow> {
    let n = libm::floor(t / h) as u64;
    let mut s = init;
    let check = |s: [f64; 2], time: f64| {
        if s.iter().all(|v| v.is_finite() && *v <= limit) {
            Ok(())
        } else {
            Err(LvOverflow { time, limit })
        }
    };
    for i in 0..n {
        s = rk4_step(p, s, h);
        check(s, (i + 1) as f64 * h)?;
    }
    let rest = t - n as f64 * h;
    if rest > 0.0 {
        s = rk4_step(p, s, rest);
        check(s, t)?;
    }
    Ok(s)
}

/// Populations at time `t`, clamped at zero and rounded to the nearest integer.
pub fn lv_integrate(p: &LvParams, init: [f64; 2], t: f64, h: f64, limit: f64) -> Result<[u64; 2], LvOverflow> {
    let s = lv_integrate_real(p, init, t, h, limit)?;
    Ok(s.map(|v| libm::round(v.max(0.0)) as u64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredatorPreyPriors {
    pub alpha: DistributionSpec,
    pub beta: DistributionSpec,
    pub gamma: DistributionSpec,
    pub delta: DistributionSpec,
    pub prey0: DistributionSpec,
    pub predator0: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredatorPreyConfig {
    #[serde_as(as = "Real")]
    pub max_time: f64,
    #[serde_as(as = "Real")]
    pub step: f64,
    #[serde_as(as = "Real")]
    pub overflow_limit: f64,
    pub priors: PredatorPreyPriors,
}

impl Default for PredatorPreyConfig {
    fn default() -> Self {
        PredatorPreyConfig {
            max_time: 50.0,
            step: 0.01,
            overflow_limit: 1e9,
            priors: PredatorPreyPriors {
                alpha: DistributionSpec::Uniform { low: 0.5, high: 1.5 },
                beta: DistributionSpec::Uniform { low: 0.05, high: 0.15 },
                gamma: DistributionSpec::Uniform { low: 0.5, high: 1.5 },
                delta: DistributionSpec::Uniform { low: 0.05, high: 0.15 },
                prey0: DistributionSpec::DiscreteUniform { low: 20, high: 60 },
                predator0: DistributionSpec::DiscreteUniform { low: 5, high: 20 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredatorPreyLatents {
    #[serde_as(as = "Real")]
    pub alpha: f64,
    #[serde_as(as = "Real")]
    pub beta: f64,
    #[serde_as(as = "Real")]
    pub gamma: f64,
    #[serde_as(as = "Real")]
    pub delta: f64,
    #[serde_as(as = "Real")]
    pub prey0: f64,
    #[serde_as(as = "Real")]
    pub predator0: f64,
}

impl PredatorPreyLatents {
    pub fn params(&self) -> LvParams {
        LvParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma, delta: self.delta }
    }
}

fn lat(l: &Latents) -> &PredatorPreyLatents {
    match l {
        Latents::PredatorPrey(x) => x,
        other => panic!("predator_prey given latents for another environment: {other:?}"),
    }
}

fn time(d: &Design) -> f64 {
    match d {
        Design::PredatorPrey { time } => *time,
        other => panic!("predator_prey given design for `{}`", other.env()),
    }
}

const NAMES: [&str; 6] = ["alpha", "beta", "gamma", "delta", "prey0", "predator0"];

impl PredatorPreyConfig {
    /// Rounded populations; a blow-up saturates at the overflow limit.
    pub fn solve(&self, latents: &Latents, design: &Design) -> ([u64; 2], bool) {
        let l = lat(latents);
        match lv_integrate(&l.params(), [l.prey0, l.predator0], time(design), self.step, self.overflow_limit) {
            Ok(s) => (s, false),
            Err(_) => ([self.overflow_limit as u64; 2], true),
        }
    }
}

impl Environment for PredatorPreyConfig {
    fn id(&self) -> EnvId {
        EnvId::PredatorPrey
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(ConfigError::invalid("max_time", "must be > 0"));
        }
        if !(self.step > 0.0 && self.step <= self.max_time) {
            return Err(ConfigError::invalid("step", "must be > 0 and at most max_time"));
        }
        if !(self.overflow_limit > 0.0 && self.overflow_limit <= 1e15) {
            return Err(ConfigError::invalid("overflow_limit", "must lie in (0, 1e15]"));
        }
        for (name, p) in self.priors() {
            check_prior(name, p)?;
            let nonneg = match *p {
                DistributionSpec::Uniform { low, .. } | DistributionSpec::TruncatedNormal { low, .. } => low >= 0.0,
                DistributionSpec::DiscreteUniform { low, .. } => low >= 0,
                DistributionSpec::HalfNormal { .. } | DistributionSpec::Poisson { .. } => true,
                _ => false,
            };
            if !nonneg {
                return Err(ConfigError::invalid(format!("priors.{name}"), "support must be nonnegative"));
            }
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        let p = &self.priors;
        vec![
            ("alpha", &p.alpha),
            ("beta", &p.beta),
            ("gamma", &p.gamma),
            ("delta", &p.delta),
            ("prey0", &p.prey0),
            ("predator0", &p.predator0),
        ]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let v: Vec<f64> = self.priors().iter().map(|(_, p)| p.draw(rng).expect("validated prior")).collect();
        Latents::PredatorPrey(PredatorPreyLatents {
            alpha: v[0],
            beta: v[1],
            gamma: v[2],
            delta: v[3],
            prey0: v[4],
            predator0: v[5],
        })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::PredatorPrey { time } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        check_range("t", time, 0.0, self.max_time)
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        Design::PredatorPrey { time: rng.uniform_range(0.0, self.max_time) }
    }

    fn default_design(&self) -> Design {
        Design::PredatorPrey { time: 0.1 * self.max_time }
    }

    fn simulate(&self, latents: &Latents, design: &Design, _rng: &mut RngState) -> Outcome {
        let ([prey, predators], _) = self.solve(latents, design);
        Outcome::Pair { prey, predators }
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let ([prey, predators], _) = self.solve(latents, design);
        if *outcome == (Outcome::Pair { prey, predators }) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        self.solve(latents, design).0.iter().map(|v| *v as f64).collect()
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Vector(self.mean_outcome(latents, d)),
            _ => panic!("predator_prey cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, goal: GoalId, latents: &Latents, input: &QueryInput, _rng: &mut RngState) -> Value {
        self.target(goal, latents, input)
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        let v = [l.alpha, l.beta, l.gamma, l.delta, l.prey0, l.predator0];
        NAMES.iter().zip(v).map(|(n, x)| (String::from(*n), x)).collect()
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        let v: Vec<f64> = NAMES.iter().map(|n| lookup(values, n)).collect::<Option<_>>()?;
        Some(Latents::PredatorPrey(PredatorPreyLatents {
            alpha: v[0],
            beta: v[1],
            gamma: v[2],
            delta: v[3],
            prey0: v[4],
            predator0: v[5],
        }))
    }

    fn observation_flags(&self, latents: &Latents, design: &Design) -> Vec<&'static str> {
        if self.solve(latents, design).1 {
            vec!["integration_overflow"]
        } else {
            Vec::new()
        }
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let t = self.max_time;
        let text = match framing {
            Framing::Prior => format!(
                "You are observing an ecosystem with a prey species and a predator species. You choose \
                 a time between 0 and {t} and observe the sizes of both populations at that time. Every \
                 observation refers to the same ecosystem starting from the same initial populations."
            ),
            Framing::NoPrior => format!(
                "You choose a real input between 0 and {t}. The system returns a pair of nonnegative \
                 integers."
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![FieldSpec::real("time", 0.0, t, "")],
            observation: match framing {
                Framing::Prior => String::from("prey and predator population counts"),
                Framing::NoPrior => String::from("pair of nonnegative integers"),
            },
            observation_units: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: LvParams = LvParams { alpha: 1.0, beta: 0.1, gamma: 1.5, delta: 0.075 };

    #[test]
    fn prey_free_axis() {
        let s = lv_integrate_real(&P, [0.0, 10.0], 5.0, 0.01, 1e9).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 10.0 * libm::exp(-7.5)).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let eq = [P.gamma / P.delta, P.alpha / P.beta];
        let s = lv_integrate_real(&P, eq, 50.0, 0.01, 1e9).unwrap();
        assert!((s[0] - eq[0]).abs() < 1e-9 && (s[1] - eq[1]).abs() < 1e-9);
    }

    #[test]
    fn overflow_detected() {
        let wild = LvParams { alpha: 30.0, beta: 0.0, gamma: 1.0, delta: 0.0 };
        assert!(lv_integrate(&wild, [10.0, 1.0], 50.0, 0.01, 1e9).is_err());
    }

    #[test]
    fn partial_final_step() {
        let a = lv_integrate_real(&P, [10.0, 5.0], 0.015, 0.01, 1e9).unwrap();
        let b = lv_integrate_real(&P, [10.0, 5.0], 0.015, 0.0005, 1e9).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    }
}
