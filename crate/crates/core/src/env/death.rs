//! Infection spread through a closed population.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    check_prior, check_range, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::{DistributionSpec, RngState};

/// Infection probability `1 - exp(-θ t)`.
pub fn death_eta(theta: f64, t: f64) -> f64 {
    -libm::expm1(-theta * t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeathPriors {
    pub theta: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeathConfig {
    pub population: u64,
    #[serde_as(as = "Real")]
    pub max_time: f64,
    pub priors: DeathPriors,
}

impl Default for DeathConfig {
    fn default() -> Self {
        DeathConfig {
            population: 50,
            max_time: 10.0,
            priors: DeathPriors {
                theta: DistributionSpec::TruncatedNormal { mean: 1.0, sigma: 1.0, low: 0.0, high: f64::INFINITY },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeathLatents {
    #[serde_as(as = "Real")]
    pub theta: f64,
}

fn lat(l: &Latents) -> &DeathLatents {
    match l {
        Latents::DeathProcess(x) => x,
        other => panic!("death_process given latents for another environment: {other:?}"),
    }
}

fn time(d: &Design) -> f64 {
    match d {
        Design::DeathProcess { time } => *time,
        other => panic!("death_process given design for `{}`", other.env()),
    }
}

impl DeathConfig {
    fn dist(&self, latents: &DeathLatents, design: &Design) -> DistributionSpec {
        DistributionSpec::Binomial { n: self.population, p: death_eta(latents.theta, time(design)) }
    }
}

impl Environment for DeathConfig {
    fn id(&self) -> EnvId {
        EnvId::DeathProcess
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.population == 0 {
            return Err(ConfigError::invalid("population", "must be at least 1"));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(ConfigError::invalid("max_time", "must be > 0"));
        }
        check_prior("theta", &self.priors.theta)?;
        let positive = match self.priors.theta {
            DistributionSpec::TruncatedNormal { low, .. } | DistributionSpec::Uniform { low, .. } => low >= 0.0,
            DistributionSpec::HalfNormal { .. } => true,
            _ => false,
        };
        if !positive {
            return Err(ConfigError::invalid("priors.theta", "support must be nonnegative"));
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![("theta", &self.priors.theta)]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        Latents::DeathProcess(DeathLatents { theta: self.priors.theta.draw(rng).expect("validated prior") })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::DeathProcess { time } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        check_range("t", time, 0.0, self.max_time)
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        // (0, max_time]
        Design::DeathProcess { time: self.max_time * (1.0 - rng.uniform()) }
    }

    fn default_design(&self) -> Design {
        Design::DeathProcess { time: 0.1 * self.max_time }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        Outcome::Count(self.dist(lat(latents), design).draw(rng).expect("valid eta") as u64)
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let Outcome::Count(c) = outcome else { return f64::NEG_INFINITY };
        self.dist(lat(latents), design).log_prob(*c as f64)
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.population as f64 * death_eta(lat(latents).theta, time(design))]
    }

    fn outcome_support(&self, _design: &Design) -> Option<Vec<Outcome>> {
        Some((0..=self.population).map(Outcome::Count).collect())
    }

    fn target(&self, goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match (goal, input) {
            (GoalId::InfectionRate, _) => Value::Scalar(lat(latents).theta),
            (_, QueryInput::Design(d)) => Value::Scalar(self.mean_outcome(latents, d)[0]),
            _ => panic!("death_process cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match (goal, input) {
            (GoalId::NumInfected, QueryInput::Design(d)) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => self.target(goal, latents, input),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        vec![(String::from("theta"), lat(latents).theta)]
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        Some(Latents::DeathProcess(DeathLatents { theta: lookup(values, "theta")? }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let (n, t) = (self.population, self.max_time);
        let text = match framing {
            Framing::Prior => format!(
                "A disease is spreading through a population of {n} healthy individuals. You choose a \
                 time t between 0 and {t} at which to observe a fresh copy of the population, and you \
                 are told how many of the {n} individuals are infected at that time. Each observation \
                 starts from a fully healthy population."
            ),
            Framing::NoPrior => format!(
                "You choose a real input t between 0 and {t}. The system returns an integer between 0 \
                 and {n}. Each query is independent of the previous ones."
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![FieldSpec::real("time", 0.0, t, "")],
            observation: match framing {
                Framing::Prior => String::from("number of infected individuals"),
                Framing::NoPrior => String::from("integer count"),
            },
            observation_units: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(death_eta(2.0, 0.0), 0.0);
        assert!((death_eta(1.0, core::f64::consts::LN_2) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..100 {
            let e = death_eta(0.7, i as f64 * 0.1);
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn zero_time_gives_zero() {
        let c = DeathConfig::default();
        let mut rng = RngState::new(1);
        let l = c.sample_latents(&mut rng);
        let d = Design::DeathProcess { time: 0.0 };
        assert!(c.check_design(&d).is_ok());
        for _ in 0..100 {
            assert_eq!(c.simulate(&l, &d, &mut rng), Outcome::Count(0));
        }
    }

    #[test]
    fn theta_positive() {
        let c = DeathConfig::default();
        let mut rng = RngState::new(2);
        for _ in 0..2000 {
            let Latents::DeathProcess(l) = c.sample_latents(&mut rng) else { unreachable!() };
            assert!(l.theta > 0.0);
        }
    }
}
