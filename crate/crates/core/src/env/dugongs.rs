//! Length of sea cows as a saturating function of age.

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
use crate::prob::special::ln_std_normal_pdf;
use crate::prob::{DistributionSpec, RngState};

/// `α − β·|λ|^x`.
pub fn dugong_mean_length(alpha: f64, beta: f64, lam: f64, x: f64) -> f64 {
    alpha - beta * libm::pow(libm::fabs(lam), x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DugongPriors {
    pub alpha: DistributionSpec,
    pub beta: DistributionSpec,
    pub lambda: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DugongConfig {
    #[serde_as(as = "Real")]
    pub noise_sigma: f64,
    #[serde_as(as = "Real")]
    pub min_age: f64,
    #[serde_as(as = "Real")]
    pub max_age: f64,
    pub priors: DugongPriors,
}

impl Default for DugongConfig {
    fn default() -> Self {
        DugongConfig {
            noise_sigma: 0.25,
            min_age: 0.0,
            max_age: 5.0,
            priors: DugongPriors {
                alpha: DistributionSpec::TruncatedNormal { mean: 2.5, sigma: 0.5, low: 0.0, high: f64::INFINITY },
                beta: DistributionSpec::TruncatedNormal { mean: 1.0, sigma: 0.3, low: 0.0, high: f64::INFINITY },
                lambda: DistributionSpec::Uniform { low: 0.0, high: 1.0 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DugongLatents {
    #[serde_as(as = "Real")]
    pub alpha: f64,
    #[serde_as(as = "Real")]
    pub beta: f64,
    #[serde_as(as = "Real")]
    pub lambda: f64,
}

fn lat(l: &Latents) -> &DugongLatents {
    match l {
        Latents::Dugongs(x) => x,
        other => panic!("dugongs given latents for another environment: {other:?}"),
    }
}

fn age(d: &Design) -> f64 {
    match d {
        Design::Dugongs { age } => *age,
        other => panic!("dugongs given design for `{}`", other.env()),
    }
}

impl DugongConfig {
    fn mean(&self, latents: &Latents, design: &Design) -> f64 {
        let l = lat(latents);
        dugong_mean_length(l.alpha, l.beta, l.lambda, age(design))
    }
}

impl Environment for DugongConfig {
    fn id(&self) -> EnvId {
        EnvId::Dugongs
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(ConfigError::invalid("noise_sigma", "must be > 0"));
        }
        if !(self.min_age >= 0.0 && self.min_age < self.max_age && self.max_age.is_finite()) {
            return Err(ConfigError::invalid("max_age", "need 0 <= min_age < max_age"));
        }
        check_prior("alpha", &self.priors.alpha)?;
        check_prior("beta", &self.priors.beta)?;
        check_prior("lambda", &self.priors.lambda)
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![("alpha", &self.priors.alpha), ("beta", &self.priors.beta), ("lambda", &self.priors.lambda)]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let alpha = self.priors.alpha.draw(rng).expect("validated prior");
        let beta = self.priors.beta.draw(rng).expect("validated prior");
        let lambda = self.priors.lambda.draw(rng).expect("validated prior");
        Latents::Dugongs(DugongLatents { alpha, beta, lambda })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::Dugongs { age } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        check_range("age", age, self.min_age, self.max_age)
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        Design::Dugongs { age: rng.uniform_range(self.min_age, self.max_age) }
    }

    fn default_design(&self) -> Design {
        Design::Dugongs { age: 0.5 * (self.min_age + self.max_age) }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        let dist = DistributionSpec::Normal { mean: self.mean(latents, design), sigma: self.noise_sigma };
        Outcome::Real(dist.draw(rng).expect("finite mean"))
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let Outcome::Real(y) = outcome else { return f64::NEG_INFINITY };
        ln_std_normal_pdf((y - self.mean(latents, design)) / self.noise_sigma) - libm::log(self.noise_sigma)
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.mean(latents, design)]
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.mean(latents, d)),
            _ => panic!("dugongs cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => panic!("dugongs cannot answer {input:?}"),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        vec![
            (String::from("alpha"), l.alpha),
            (String::from("beta"), l.beta),
            (String::from("lambda"), l.lambda),
        ]
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        Some(Latents::Dugongs(DugongLatents {
            alpha: lookup(values, "alpha")?,
            beta: lookup(values, "beta")?,
            lambda: lookup(values, "lambda")?,
        }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let (lo, hi) = (self.min_age, self.max_age);
        let text = match framing {
            Framing::Prior => format!(
                "You are studying sea cows (dugongs). You choose an age between {lo} and {hi} years and \
                 observe the measured body length of a dugong of that age. Lengths vary between \
                 individuals of the same age."
            ),
            Framing::NoPrior => format!(
                "You choose a real input between {lo} and {hi}. The system returns a noisy real number."
            ),
        };
        let units = if framing == Framing::Prior { "years" } else { "" };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![FieldSpec::real("age", lo, hi, units)],
            observation: match framing {
                Framing::Prior => String::from("body length"),
                Framing::NoPrior => String::from("real number"),
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
        assert_eq!(dugong_mean_length(2.5, 1.0, 0.3, 0.0), 1.5);
        assert!((dugong_mean_length(2.5, 1.0, 0.5, 1.0) - 2.0).abs() < 1e-15);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let m = dugong_mean_length(2.5, 1.0, 0.7, i as f64);
            assert!(m > prev && m < 2.5);
            prev = m;
        }
        assert!((dugong_mean_length(2.5, 1.0, 0.7, 200.0) - 2.5).abs() < 1e-12);
    }
}
