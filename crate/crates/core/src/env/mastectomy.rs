//! Survival of breast-cancer patients after mastectomy.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    binary_class, check_prior, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, PublicContext, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::special::logistic;
use crate::prob::{DistributionSpec, RngState};

/// `logistic(time · exp(β·metastasized) · λ₀)`.
pub fn mastectomy_death_prob(lambda0: f64, beta: f64, metastasized: bool, time_since_surgery: f64) -> f64 {
    let rate = if metastasized { libm::exp(beta) * lambda0 } else { lambda0 };
    logistic(time_since_surgery * rate)
}

#[serde_as]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    #[serde_as(as = "Real")]
    pub time: f64,
    pub metastasized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MastectomyPriors {
    pub lambda0: DistributionSpec,
    pub beta: DistributionSpec,
    pub metastasized: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MastectomyConfig {
    pub num_patients: usize,
    /// Times since surgery are uniform on `[0, time_upper_bound]`.
    #[serde_as(as = "Real")]
    pub time_upper_bound: f64,
    pub priors: MastectomyPriors,
}

impl Default for MastectomyConfig {
    fn default() -> Self {
        MastectomyConfig {
            num_patients: 100,
            time_upper_bound: 10.0,
            priors: MastectomyPriors {
                lambda0: DistributionSpec::HalfNormal { scale: 0.2 },
                beta: DistributionSpec::Normal { mean: 1.0, sigma: 0.5 },
                metastasized: DistributionSpec::Bernoulli { p: 0.5 },
            },
        }
    }
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MastectomyLatents {
    #[serde_as(as = "Real")]
    pub lambda0: f64,
    #[serde_as(as = "Real")]
    pub beta: f64,
    pub patients: Vec<Patient>,
}

fn lat(l: &Latents) -> &MastectomyLatents {
    match l {
        Latents::Mastectomy(x) => x,
        other => panic!("mastectomy given latents for another environment: {other:?}"),
    }
}

impl MastectomyConfig {
    fn patient_prob(l: &MastectomyLatents, p: &Patient) -> f64 {
        mastectomy_death_prob(l.lambda0, l.beta, p.metastasized, p.time)
    }

    fn prob(&self, latents: &Latents, design: &Design) -> f64 {
        let l = lat(latents);
        match design {
            Design::Mastectomy { patient } => Self::patient_prob(l, &l.patients[*patient]),
            other => panic!("mastectomy given design for `{}`", other.env()),
        }
    }

    fn draw_patient(&self, rng: &mut RngState) -> Patient {
        let time = rng.uniform_range(0.0, self.time_upper_bound);
        let metastasized = self.priors.metastasized.draw(rng).expect("validated prior") == 1.0;
        Patient { time, metastasized }
    }

    fn draw_hidden(&self, rng: &mut RngState) -> (f64, f64) {
        let lambda0 = self.priors.lambda0.draw(rng).expect("validated prior");
        let beta = self.priors.beta.draw(rng).expect("validated prior");
        (lambda0, beta)
    }
}

impl Environment for MastectomyConfig {
    fn id(&self) -> EnvId {
        EnvId::Mastectomy
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.num_patients == 0 {
            return Err(ConfigError::invalid("num_patients", "must be at least 1"));
        }
        if !(self.time_upper_bound > 0.0 && self.time_upper_bound.is_finite()) {
            return Err(ConfigError::invalid("time_upper_bound", "must be > 0"));
        }
        check_prior("lambda0", &self.priors.lambda0)?;
        check_prior("beta", &self.priors.beta)?;
        check_prior("metastasized", &self.priors.metastasized)?;
        if !matches!(self.priors.metastasized, DistributionSpec::Bernoulli { .. }) {
            return Err(ConfigError::invalid("priors.metastasized", "must be bernoulli"));
        }
        if !matches!(self.priors.lambda0, DistributionSpec::HalfNormal { .. })
            && !matches!(self.priors.lambda0, DistributionSpec::TruncatedNormal { low, .. } | DistributionSpec::Uniform { low, .. } if low >= 0.0)
        {
            return Err(ConfigError::invalid("priors.lambda0", "support must be nonnegative"));
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        vec![
            ("lambda0", &self.priors.lambda0),
            ("beta", &self.priors.beta),
            ("metastasized", &self.priors.metastasized),
        ]
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let (lambda0, beta) = self.draw_hidden(rng);
        let patients = (0..self.num_patients).map(|_| self.draw_patient(rng)).collect();
        Latents::Mastectomy(MastectomyLatents { lambda0, beta, patients })
    }

    fn resample_hidden(&self, context: &Latents, rng: &mut RngState) -> Latents {
        let (lambda0, beta) = self.draw_hidden(rng);
        Latents::Mastectomy(MastectomyLatents { lambda0, beta, patients: lat(context).patients.clone() })
    }

    fn prior_given_public(&self, public: &PublicContext, rng: &mut RngState) -> Latents {
        match public {
            PublicContext::Patients(patients) => {
                let (lambda0, beta) = self.draw_hidden(rng);
                Latents::Mastectomy(MastectomyLatents { lambda0, beta, patients: patients.clone() })
            }
            PublicContext::None => self.sample_latents(rng),
        }
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::Mastectomy { patient } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        if patient >= self.num_patients {
            return Err(Rejection::new(
                "out_of_range",
                format!("patient must be between 0 and {}, got {patient}", self.num_patients - 1),
            ));
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        Design::Mastectomy { patient: rng.index(self.num_patients) }
    }

    fn default_design(&self) -> Design {
        Design::Mastectomy { patient: 0 }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        Outcome::Binary((rng.uniform() < self.prob(latents, design)) as u8)
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let p = self.prob(latents, design);
        match outcome {
            Outcome::Binary(1) => libm::log(p),
            Outcome::Binary(0) => libm::log1p(-p),
            _ => f64::NEG_INFINITY,
        }
    }

    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![self.prob(latents, design)]
    }

    fn outcome_support(&self, _design: &Design) -> Option<Vec<Outcome>> {
        Some(vec![Outcome::Binary(0), Outcome::Binary(1)])
    }

    fn query_input(&self, _goal: GoalId, _latents: &Latents, rng: &mut RngState) -> QueryInput {
        let p = self.draw_patient(rng);
        QueryInput::Patient { time: p.time, metastasized: p.metastasized }
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        let l = lat(latents);
        let p = match input {
            QueryInput::Patient { time, metastasized } => {
                Self::patient_prob(l, &Patient { time: *time, metastasized: *metastasized })
            }
            QueryInput::Design(d) => self.prob(latents, d),
            QueryInput::Latent => panic!("mastectomy has no latent goal"),
        };
        Value::Scalar(binary_class(p))
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        let l = lat(latents);
        let p = match input {
            QueryInput::Patient { time, metastasized } => {
                Self::patient_prob(l, &Patient { time: *time, metastasized: *metastasized })
            }
            QueryInput::Design(d) => self.prob(latents, d),
            QueryInput::Latent => panic!("mastectomy has no latent goal"),
        };
        Value::Scalar((rng.uniform() < p) as u8 as f64)
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        vec![(String::from("lambda0"), l.lambda0), (String::from("beta"), l.beta)]
    }

    fn from_summary(&self, values: &[(String, f64)], template: &Latents) -> Option<Latents> {
        Some(Latents::Mastectomy(MastectomyLatents {
            lambda0: lookup(values, "lambda0")?,
            beta: lookup(values, "beta")?,
            patients: lat(template).patients.clone(),
        }))
    }

    fn public_context(&self, latents: &Latents) -> PublicContext {
        PublicContext::Patients(lat(latents).patients.clone())
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let (n, t) = (self.num_patients, self.time_upper_bound);
        let text = match framing {
            Framing::Prior => format!(
                "You are studying survival of {n} breast cancer patients after mastectomy. For each \
                 patient you know the time since surgery (between 0 and {t} years) and whether the \
                 cancer had metastasized. You choose a patient by index (0 to {}) and observe whether \
                 that patient died (1) or is still alive (0).",
                n - 1
            ),
            Framing::NoPrior => format!(
                "There are {n} items, each with a real attribute between 0 and {t} and a binary \
                 attribute. You choose an item by index (0 to {}) and the system returns a binary \
                 response, 0 or 1.",
                n - 1
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![FieldSpec::integer("patient", 0.0, (n - 1) as f64)],
            observation: match framing {
                Framing::Prior => String::from("binary outcome (1 = died, 0 = alive)"),
                Framing::NoPrior => String::from("binary response"),
            },
            observation_units: String::new(),
        }
    }
}
