//! Students answering exam questions (1PL, 2PL and 3PL item response models).

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
use crate::prob::special::logistic;
use crate::prob::{DistributionSpec, RngState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrtVariant {
    #[serde(rename = "1pl")]
    OnePl,
    #[default]
    #[serde(rename = "2pl")]
    TwoPl,
    #[serde(rename = "3pl")]
    ThreePl,
}

/// Probability that student `j` answers question `k` correctly.
/// `gamma` is ignored under 1PL and `c` is ignored except under 3PL.
pub fn irt_correct_prob(variant: IrtVariant, alpha_j: f64, beta_k: f64, gamma_k: f64, c_k: f64) -> f64 {
    let gamma = if variant == IrtVariant::OnePl { 1.0 } else { gamma_k };
    let p = logistic(gamma * (alpha_j - beta_k));
    match variant {
        IrtVariant::ThreePl => c_k + (1.0 - c_k) * p,
        _ => p,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrtPriors {
    pub ability: DistributionSpec,
    pub difficulty: DistributionSpec,
    /// Drawn, then shifted by `discriminability_offset`.
    pub discriminability: DistributionSpec,
    pub guessing: DistributionSpec,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrtConfig {
    pub variant: IrtVariant,
    pub num_students: usize,
    pub num_questions: usize,
    #[serde_as(as = "Real")]
    pub discriminability_offset: f64,
    pub priors: IrtPriors,
}

impl Default for IrtConfig {
    fn default() -> Self {
        IrtConfig {
            variant: IrtVariant::TwoPl,
            num_students: 6,
            num_questions: 6,
            discriminability_offset: 0.5,
            priors: IrtPriors {
                ability: DistributionSpec::Normal { mean: 0.0, sigma: 1.0 },
                difficulty: DistributionSpec::Normal { mean: 0.0, sigma: 1.0 },
                discriminability: DistributionSpec::HalfNormal { scale: 1.0 },
                guessing: DistributionSpec::Uniform { low: 0.0, high: 0.4 },
            },
        }
    }
}

/// `discriminabilities` is empty under 1PL; `guessing` is empty except under 3PL.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrtLatents {
    #[serde_as(as = "Vec<Real>")]
    pub abilities: Vec<f64>,
    #[serde_as(as = "Vec<Real>")]
    pub difficulties: Vec<f64>,
    #[serde_as(as = "Vec<Real>")]
    #[serde(default)]
    pub discriminabilities: Vec<f64>,
    #[serde_as(as = "Vec<Real>")]
    #[serde(default)]
    pub guessing: Vec<f64>,
}

fn lat(l: &Latents) -> &IrtLatents {
    match l {
        Latents::Irt(x) => x,
        other => panic!("irt given latents for another environment: {other:?}"),
    }
}

fn pair(d: &Design) -> (usize, usize) {
    match d {
        Design::Irt { student, question } => (*student, *question),
        other => panic!("irt given design for `{}`", other.env()),
    }
}

impl IrtConfig {
    pub fn prob(&self, l: &IrtLatents, design: &Design) -> f64 {
        let (j, k) = pair(design);
        let gamma = l.discriminabilities.get(k).copied().unwrap_or(1.0);
        let c = l.guessing.get(k).copied().unwrap_or(0.0);
        irt_correct_prob(self.variant, l.abilities[j], l.difficulties[k], gamma, c)
    }
}

impl Environment for IrtConfig {
    fn id(&self) -> EnvId {
        EnvId::Irt
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.num_students == 0 || self.num_questions == 0 {
            return Err(ConfigError::invalid("num_students", "need at least one student and one question"));
        }
        if !(self.discriminability_offset >= 0.0 && self.discriminability_offset.is_finite()) {
            return Err(ConfigError::invalid("discriminability_offset", "must be >= 0"));
        }
        check_prior("ability", &self.priors.ability)?;
        check_prior("difficulty", &self.priors.difficulty)?;
        check_prior("discriminability", &self.priors.discriminability)?;
        check_prior("guessing", &self.priors.guessing)?;
        if let DistributionSpec::Uniform { low, high } = self.priors.guessing {
            if low < 0.0 || high >= 1.0 {
                return Err(ConfigError::invalid("priors.guessing", "support must lie in [0, 1)"));
            }
        } else {
            return Err(ConfigError::invalid("priors.guessing", "must be uniform"));
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        let mut out = vec![("ability", &self.priors.ability), ("difficulty", &self.priors.difficulty)];
        if self.variant != IrtVariant::OnePl {
            out.push(("discriminability", &self.priors.discriminability));
        }
        if self.variant == IrtVariant::ThreePl {
            out.push(("guessing", &self.priors.guessing));
        }
        out
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let mut draw_n = |spec: &DistributionSpec, n: usize, shift: f64| -> Vec<f64> {
            (0..n).map(|_| spec.draw(rng).expect("validated prior") + shift).collect()
        };
        let abilities = draw_n(&self.priors.ability, self.num_students, 0.0);
        let difficulties = draw_n(&self.priors.difficulty, self.num_questions, 0.0);
        let discriminabilities = if self.variant == IrtVariant::OnePl {
            Vec::new()
        } else {
            draw_n(&self.priors.discriminability, self.num_questions, self.discriminability_offset)
        };
        let guessing = if self.variant == IrtVariant::ThreePl {
            draw_n(&self.priors.guessing, self.num_questions, 0.0)
        } else {
            Vec::new()
        };
        Latents::Irt(IrtLatents { abilities, difficulties, discriminabilities, guessing })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::Irt { student, question } = *design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        if student >= self.num_students {
            return Err(Rejection::new(
                "out_of_range",
                format!("student must be between 0 and {}, got {student}", self.num_students - 1),
            ));
        }
        if question >= self.num_questions {
            return Err(Rejection::new(
                "out_of_range",
                format!("question must be between 0 and {}, got {question}", self.num_questions - 1),
            ));
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        let student = rng.index(self.num_students);
        let question = rng.index(self.num_questions);
        Design::Irt { student, question }
    }

    fn default_design(&self) -> Design {
        Design::Irt { student: 0, question: 0 }
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

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(binary_class(self.prob(lat(latents), d))),
            _ => panic!("irt cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => panic!("irt cannot answer {input:?}"),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let l = lat(latents);
        let mut out = Vec::new();
        let groups: [(&str, &Vec<f64>); 4] = [
            ("ability", &l.abilities),
            ("difficulty", &l.difficulties),
            ("discriminability", &l.discriminabilities),
            ("guessing", &l.guessing),
        ];
        for (name, xs) in groups {
            for (i, x) in xs.iter().enumerate() {
                out.push((format!("{name}_{i}"), *x));
            }
        }
        out
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        let grab = |name: &str, n: usize| -> Option<Vec<f64>> {
            (0..n).map(|i| lookup(values, &format!("{name}_{i}"))).collect()
        };
        let q = self.num_questions;
        Some(Latents::Irt(IrtLatents {
            abilities: grab("ability", self.num_students)?,
            difficulties: grab("difficulty", q)?,
            discriminabilities: if self.variant == IrtVariant::OnePl { Vec::new() } else { grab("discriminability", q)? },
            guessing: if self.variant == IrtVariant::ThreePl { grab("guessing", q)? } else { Vec::new() },
        }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let (s, q) = (self.num_students, self.num_questions);
        let text = match framing {
            Framing::Prior => format!(
                "There are {s} students and {q} exam questions. You choose a student (0 to {}) and a \
                 question (0 to {}) and observe whether that student answered the question correctly \
                 (1) or not (0). Students differ in ability and questions differ in difficulty.",
                s - 1,
                q - 1
            ),
            Framing::NoPrior => format!(
                "You choose a pair of integers (i, j) with i between 0 and {} and j between 0 and {}. \
                 The system returns a binary response, 0 or 1.",
                s - 1,
                q - 1
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![
                FieldSpec::integer("student", 0.0, (s - 1) as f64),
                FieldSpec::integer("question", 0.0, (q - 1) as f64),
            ],
            observation: String::from("binary correctness (1 = correct)"),
            observation_units: String::new(),
        }
    }
}
