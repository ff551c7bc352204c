//! Choices between an immediate and a delayed reward under hyperbolic discounting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    binary_class, check_prior, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::special::std_normal_cdf;
use crate::prob::{DistributionSpec, RngState};

/// Probability of choosing the delayed reward.
pub fn hd_choice_prob(k: f64, alpha: f64, ir: f64, dr: f64, delay: f64, eps: f64) -> f64 {
    let v_delayed = dr / (1.0 + k * delay);
    eps + (1.0 - 2.0 * eps) * std_normal_cdf((v_delayed - ir) / alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPriors {
    pub log_k: DistributionSpec,
    pub alpha: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicConfig {
    #[serde_as(as = "Real")]
    pub epsilon: f64,
    #[serde_as(as = "Real")]
    pub max_reward: f64,
    #[serde_as(as = "Real")]
    pub max_delay: f64,
    pub priors: HyperbolicPriors,
}

impl Default for HyperbolicConfig {
    fn default() -> Self {
        HyperbolicConfig {
            epsilon: 0.01,
            max_reward: 300.0,
            max_delay: 365.0,
            priors: HyperbolicPriors {
                log_k: DistributionSpec::Normal { mean: -4.25, sigma: 1.5 },
                alpha: DistributionSpec::HalfNormal { scale: 2.0 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicLatents {
    #[serde_as(as = "Real")]
    pub log_k: f64,
    #[serde_as(as = "Real")]
    pub alpha: f64,
}

impl HyperbolicLatents {
    pub fn k(&self) -> f64 {
        libm::exp(self.log_k)
    }
}

fn lat(l: &Latents) -> &HyperbolicLatents {
    match l {
        Latents::HyperbolicDiscounting(x) => x,
        other => panic!("hyperbolic_discounting given latents for another environment: {other:?}"),
    }
}

fn parts(d: &Design) -> (f64, f64, f64) {
    match d {
        Design::HyperbolicDiscounting { ir, dr, delay } => (*ir, *dr, *delay),
        other => panic!("hyperbolic_discounting given design for `{}`", other.env()),
    }
}

impl HyperbolicConfig {
    pub fn prob(&self, latents: &HyperbolicLatents, design: &Design) -> f64 {
        let (ir, dr, delay) = parts(design);
        hd_choice_prob(latents.k(), latents.alpha, ir, dr, delay, self.epsilon)
    }
}

impl Environment for HyperbolicConfig {
    fn id(&self) -> EnvId {
        EnvId::HyperbolicDiscounting
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(ConfigError::invalid("epsilon", "must lie in [0, 0.5)"));
        }
        if !(self.max_reward > 0.0 && self.max_reward.is_finite()) {
            return Err(ConfigError::invalid("max_reward", "must be > 0"));
        }
        if !(self.max_delay > 0.0 && self.max_delay.is_finite()) {
            return Err(ConfigError::invalid("max_delay", "must be > 0"));
        }
        check_prior("log_k", &self.priors.log_k)?;
        check_prior("alpha", &self.priors.alpha)?;
        if let DistributionSpec::Uniform { low, .. } | DistributionSpec::TruncatedNormal { low, .. } =
            self.priors.alpha
        {
            if low < 0.0 {
                return Err(ConfigError::invalid("priors.alpha", "support must be positive"));
            }
        } else if !matches!(self.priors.alpha, DistributionSpec::HalfNormal { .. }) {
            return Err(ConfigError::invalid("priors.alpha", "must be half_normal, truncated_normal or uniform"));
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![("log_k", &self.priors.log_k), ("alpha", &self.priors.alpha)]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let log_k = self.priors.log_k.draw(rng).expect("validated prior");
        let alpha = self.priors.alpha.draw(rng).expect("validated prior");
        Latents::HyperbolicDiscounting(HyperbolicLatents { log_k, alpha })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::HyperbolicDiscounting { ir, dr, delay } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        for (name, v, max) in [("iR", ir, self.max_reward), ("dR", dr, self.max_reward), ("D", delay, self.max_delay)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Rejection::new("not_positive", format!("{name} must be positive, got {v}")));
            }
            if v > max {
                return Err(Rejection::new("out_of_range", format!("{name} must be at most {max}, got {v}")));
            }
        }
        if ir >= dr {
            return Err(Rejection::new("order", "iR must be strictly less than dR"));
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        loop {
            let a = rng.uniform_range(0.0, self.max_reward);
            let b = rng.uniform_range(0.0, self.max_reward);
            let delay = rng.uniform_range(0.0, self.max_delay);
            if a != b {
                return Design::HyperbolicDiscounting { ir: a.min(b), dr: a.max(b), delay };
            }
        }
    }

    fn default_design(&self) -> Design {
        Design::HyperbolicDiscounting {
            ir: 0.25 * self.max_reward,
            dr: 0.5 * self.max_reward,
            delay: 0.1 * self.max_delay,
        }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        let p = self.prob(lat(latents), design);
        Outcome::Binary((rng.uniform() < p) as u8)
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let p = self.prob(lat(latents), design);
        match outcome {
            Outcome::Binary(1) => libm::log(p),
            Outcome::Binary(0) => libm::log1p(-p),
            _ => f64::NEG_INFINITY,
        }
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.prob(lat(latents), design)]
    }

    fn outcome_support(&self, _design: &Design) -> Option<Vec<Outcome>> {
        Some(vec![Outcome::Binary(0), Outcome::Binary(1)])
    }

    fn target(&self, goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match (goal, input) {
            (GoalId::DiscountFactor, _) => Value::Scalar(lat(latents).k()),
            (_, QueryInput::Design(d)) => Value::Scalar(binary_class(self.prob(lat(latents), d))),
            _ => panic!("hyperbolic_discounting cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match (goal, input) {
            (GoalId::Choice, QueryInput::Design(d)) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => self.target(goal, latents, input),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        vec![(String::from("log_k"), l.log_k), (String::from("alpha"), l.alpha)]
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        Some(Latents::HyperbolicDiscounting(HyperbolicLatents {
            log_k: lookup(values, "log_k")?,
            alpha: lookup(values, "alpha")?,
        }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let (r, d) = (self.max_reward, self.max_delay);
        let text = match framing {
            Framing::Prior => format!(
                "In this study you are observing how participants balance delayed vs immediate rewards. \
                 Each trial offers a participant an immediate reward iR (in dollars) or a delayed reward dR \
                 (in dollars) paid after D days. The participant answers 1 for the delayed reward and 0 for \
                 the immediate one. iR must be strictly less than dR, rewards are at most {r} and delays at \
                 most {d} days."
            ),
            Framing::NoPrior => format!(
                "For each query you receive a tuple of three values (iR, dR, D) that you choose and the \
                 system returns a binary response, 0 or 1. All three values must be positive, iR must be \
                 strictly less than dR, the first two are at most {r} and D is at most {d}."
            ),
        };
        let units = |u: &'static str| match framing {
            Framing::Prior => u,
            Framing::NoPrior => "",
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![
                FieldSpec::real("ir", 0.0, r, units("dollars")),
                FieldSpec::real("dr", 0.0, r, units("dollars")),
                FieldSpec::real("delay", 0.0, d, units("days")),
            ],
            observation: String::from("binary choice (1 = delayed, 0 = immediate)"),
            observation_units: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        // k chosen so the delayed value equals iR
        assert!((hd_choice_prob(0.1, 3.0, 50.0, 100.0, 10.0, 0.01) - 0.5).abs() < 1e-12);
        let p = hd_choice_prob(0.1, 10.0, 40.0, 100.0, 10.0, 0.01);
        assert!((p - (0.01 + 0.98 * 0.841_344_746_068_543)).abs() < 1e-7);
        assert!((p - 0.8345).abs() < 1e-4);
        let far = hd_choice_prob(0.5, 10.0, 40.0, 100.0, 1e12, 0.01);
        let limit = 0.01 + 0.98 * std_normal_cdf(-4.0);
        assert!((far - limit).abs() < 1e-9 && far < 0.5);
    }

    #[test]
    fn design_rules() {
        let c = HyperbolicConfig::default();
        let bad = Design::HyperbolicDiscounting { ir: 50.0, dr: 50.0, delay: 10.0 };
        let r = c.check_design(&bad).unwrap_err();
        assert_eq!(r.reason, "iR must be strictly less than dR");
        let neg = Design::HyperbolicDiscounting { ir: -1.0, dr: 50.0, delay: 10.0 };
        assert_eq!(c.check_design(&neg).unwrap_err().code, "not_positive");
        let zero_delay = Design::HyperbolicDiscounting { ir: 1.0, dr: 50.0, delay: 0.0 };
        assert!(c.check_design(&zero_delay).is_err());
        let mut rng = RngState::new(3);
        for _ in 0..200 {
            assert!(c.check_design(&c.random_design(&mut rng)).is_ok());
        }
    }

    #[test]
    fn framing_strings() {
        let c = HyperbolicConfig::default();
        assert!(c.describe(Framing::Prior).text.contains("you are observing how participants balance delayed vs immediate rewards"));
        let np = c.describe(Framing::NoPrior).text;
        assert!(np.contains("you receive a tuple of three values"));
        assert!(!np.contains("reward") && !np.contains("dollar") && !np.contains("days"));
    }
}
