//! Falcon population counts with a cubic log-rate in time.

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

/// `α + β₁t + β₂t² + β₃t³`, capped at `max_log_rate`. The flag reports a cap.
pub fn peregrine_log_rate(coeffs: [f64; 4], t: f64, max_log_rate: f64) -> (f64, bool) {
    let [a, b1, b2, b3] = coeffs;
    let v = a + t * (b1 + t * (b2 + t * b3));
    if v > max_log_rate {
        (max_log_rate, true)
    } else {
        (v, false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeregrinePriors {
    pub alpha: DistributionSpec,
    pub beta1: DistributionSpec,
    pub beta2: DistributionSpec,
    pub beta3: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeregrineConfig {
    #[serde_as(as = "Real")]
    pub max_time: f64,
    #[serde_as(as = "Real")]
    pub max_log_rate: f64,
    pub priors: PeregrinePriors,
}

impl Default for PeregrineConfig {
    fn default() -> Self {
        PeregrineConfig {
            max_time: 5.0,
            max_log_rate: 20.0,
            priors: PeregrinePriors {
                alpha: DistributionSpec::Normal { mean: 4.0, sigma: 0.5 },
                beta1: DistributionSpec::Normal { mean: 1.5, sigma: 0.5 },
                beta2: DistributionSpec::Normal { mean: -0.8, sigma: 0.3 },
                beta3: DistributionSpec::Normal { mean: 0.1, sigma: 0.1 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeregrineLatents {
    #[serde_as(as = "Real")]
    pub alpha: f64,
    #[serde_as(as = "Real")]
    pub beta1: f64,
    #[serde_as(as = "Real")]
    pub beta2: f64,
    #[serde_as(as = "Real")]
    pub beta3: f64,
}

impl PeregrineLatents {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.alpha, self.beta1, self.beta2, self.beta3]
    }
}

fn lat(l: &Latents) -> &PeregrineLatents {
    match l {
        Latents::Peregrines(x) => x,
        other => panic!("peregrines given latents for another environment: {other:?}"),
    }
}

fn time(d: &Design) -> f64 {
    match d {
        Design::Peregrines { time } => *time,
        other => panic!("peregrines given design for `{}`", other.env()),
    }
}

impl PeregrineConfig {
    pub fn rate(&self, latents: &Latents, design: &Design) -> f64 {
        libm::exp(peregrine_log_rate(lat(latents).coefficients(), time(design), self.max_log_rate).0)
    }
}

impl Environment for PeregrineConfig {
    fn id(&self) -> EnvId {
        EnvId::Peregrines
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(ConfigError::invalid("max_time", "must be > 0"));
        }
        if !(self.max_log_rate.is_finite() && self.max_log_rate <= 40.0) {
            return Err(ConfigError::invalid("max_log_rate", "must be finite and at most 40"));
        }
        for (name, p) in self.priors() {
            check_prior(name, p)?;
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![
            ("alpha", &self.priors.alpha),
            ("beta1", &self.priors.beta1),
            ("beta2", &self.priors.beta2),
            ("beta3", &self.priors.beta3),
        ]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let mut d = |s: &DistributionSpec| s.draw(rng).expect("validated prior");
        let alpha = d(&self.priors.alpha);
        let beta1 = d(&self.priors.beta1);
        let beta2 = d(&self.priors.beta2);
        let beta3 = d(&self.priors.beta3);
        Latents::Peregrines(PeregrineLatents { alpha, beta1, beta2, beta3 })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::Peregrines { time } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        check_range("t", time, 0.0, self.max_time)
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        Design::Peregrines { time: rng.uniform_range(0.0, self.max_time) }
    }

    fn default_design(&self) -> Design {
        Design::Peregrines { time: 0.5 * self.max_time }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        let dist = DistributionSpec::Poisson { rate: self.rate(latents, design) };
        Outcome::Count(dist.draw(rng).expect("positive rate") as u64)
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let Outcome::Count(c) = outcome else { return f64::NEG_INFINITY };
        DistributionSpec::Poisson { rate: self.rate(latents, design) }.log_prob(*c as f64)
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.rate(latents, design)]
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.rate(latents, d)),
            _ => panic!("peregrines cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => panic!("peregrines cannot answer {input:?}"),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        vec![
            (String::from("alpha"), l.alpha),
            (String::from("beta1"), l.beta1),
            (String::from("beta2"), l.beta2),
            (String::from("beta3"), l.beta3),
        ]
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        Some(Latents::Peregrines(PeregrineLatents {
            alpha: lookup(values, "alpha")?,
            beta1: lookup(values, "beta1")?,
            beta2: lookup(values, "beta2")?,
            beta3: lookup(values, "beta3")?,
        }))
    }

    fn observation_flags(&self, latents: &Latents, design: &Design) -> Vec<&'static str> {
        if peregrine_log_rate(lat(latents).coefficients(), time(design), self.max_log_rate).1 {
            vec!["log_rate_clamped"]
        } else {
            Vec::new()
        }
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let t = self.max_time;
        let text = match framing {
            Framing::Prior => format!(
                "You are monitoring a population of peregrine falcons. You choose a time between 0 and \
                 {t} (in units of years since monitoring began) and observe the number of falcons \
                 counted at that time."
            ),
            Framing::NoPrior => format!(
                "You choose a real input between 0 and {t}. The system returns a nonnegative integer."
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![FieldSpec::real("time", 0.0, t, "")],
            observation: match framing {
                Framing::Prior => String::from("population count"),
                Framing::NoPrior => String::from("nonnegative integer"),
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
        assert_eq!(peregrine_log_rate([0.0; 4], 3.0, 20.0), (0.0, false));
        let (v, _) = peregrine_log_rate([4.0, 1.0, 0.0, 0.0], 2.0, 20.0);
        assert_eq!(v, 6.0);
        assert!((libm::exp(v) - 403.428_793_492_735_1).abs() < 1e-9);
        assert_eq!(peregrine_log_rate([0.0, 0.0, 0.0, -1.0], 5.0, 20.0).0, -125.0);
        assert_eq!(peregrine_log_rate([30.0, 0.0, 0.0, 0.0], 1.0, 20.0), (20.0, true));
    }
}
