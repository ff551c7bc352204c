//! Which of two groups a participant would spare in an autonomous-vehicle dilemma.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{
    binary_class, check_prior, lookup, ConfigError, Design, EnvDescription, EnvId, Environment,
    FieldSpec, Framing, GoalId, Latents, Outcome, QueryInput, Rejection, Value,
};
use crate::num::Real;
use crate::prob::special::logistic;
use crate::prob::{DistributionSpec, RngState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intervention {
    Swerve,
    Stay,
}

impl Intervention {
    pub fn as_str(self) -> &'static str {
        match self {
            Intervention::Swerve => "swerve",
            Intervention::Stay => "stay",
        }
    }

    /// Signed indicator entering the logit for saving group 1.
    pub fn score(self) -> f64 {
        match self {
            Intervention::Swerve => -1.0,
            Intervention::Stay => 0.0,
        }
    }
}

impl FromStr for Intervention {
    type Err = Rejection;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "swerve" => Ok(Intervention::Swerve),
            "stay" => Ok(Intervention::Stay),
            other => Err(Rejection::new(
                "unknown_intervention",
                format!("intervention must be `swerve` or `stay`, got `{other}`"),
            )),
        }
    }
}

/// Feature encoding of one character.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterTraits {
    pub name: String,
    pub human: bool,
    /// Female +1, male −1, neutral 0.
    #[serde_as(as = "Real")]
    pub gender: f64,
    /// Young +1, adult 0, old −1.
    #[serde_as(as = "Real")]
    pub age: f64,
    #[serde_as(as = "Real")]
    pub status: f64,
    #[serde_as(as = "Real")]
    pub fitness: f64,
}

fn ch(name: &str, human: bool, gender: f64, age: f64, status: f64, fitness: f64) -> CharacterTraits {
    CharacterTraits { name: name.to_string(), human, gender, age, status, fitness }
}

/// The default 18-character encoding table.
pub fn default_characters() -> Vec<CharacterTraits> {
    vec![
        ch("stroller", true, 0.0, 1.0, 0.0, 0.0),
        ch("boy", true, -1.0, 1.0, 0.0, 0.0),
        ch("girl", true, 1.0, 1.0, 0.0, 0.0),
        ch("pregnant_woman", true, 1.0, 0.0, 0.0, 0.0),
        ch("male_doctor", true, -1.0, 0.0, 0.5, 0.0),
        ch("female_doctor", true, 1.0, 0.0, 0.5, 0.0),
        ch("female_athlete", true, 1.0, 0.0, 0.0, 1.0),
        ch("male_athlete", true, -1.0, 0.0, 0.0, 1.0),
        ch("female_executive", true, 1.0, 0.0, 0.5, 0.0),
        ch("male_executive", true, -1.0, 0.0, 0.5, 0.0),
        ch("large_woman", true, 1.0, 0.0, 0.0, -1.0),
        ch("large_man", true, -1.0, 0.0, 0.0, -1.0),
        ch("homeless", true, 0.0, 0.0, -0.5, 0.0),
        ch("old_man", true, -1.0, -1.0, 0.0, 0.0),
        ch("old_woman", true, 1.0, -1.0, 0.0, 0.0),
        ch("criminal", true, 0.0, 0.0, -0.5, 0.0),
        ch("dog", false, 0.0, 0.0, 0.0, 0.0),
        ch("cat", false, 0.0, 0.0, 0.0, 0.0),
    ]
}

/// Attribute names in the order of [`MoralCoeffs::attributes`] and group features.
pub const ATTRIBUTES: [&str; 6] = ["gender", "age", "social_status", "fitness", "human_count", "species"];

#[serde_as]
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoralCoeffs {
    #[serde_as(as = "Real")]
    pub group: f64,
    #[serde_as(as = "Real")]
    pub intervention: f64,
    #[serde_as(as = "Real")]
    pub gender: f64,
    #[serde_as(as = "Real")]
    pub fitness: f64,
    #[serde_as(as = "Real")]
    pub social_status: f64,
    #[serde_as(as = "Real")]
    pub age: f64,
    #[serde_as(as = "Real")]
    pub human_count: f64,
    #[serde_as(as = "Real")]
    pub species: f64,
}

impl MoralCoeffs {
    pub fn attributes(&self) -> [f64; 6] {
        [self.gender, self.age, self.social_status, self.fitness, self.human_count, self.species]
    }

    const NAMES: [&'static str; 8] =
        ["group", "intervention", "gender", "fitness", "social_status", "age", "human_count", "species"];

    fn values(&self) -> [f64; 8] {
        [
            self.group,
            self.intervention,
            self.gender,
            self.fitness,
            self.social_status,
            self.age,
            self.human_count,
            self.species,
        ]
    }

    fn from_values(v: [f64; 8]) -> Self {
        MoralCoeffs {
            group: v[0],
            intervention: v[1],
            gender: v[2],
            fitness: v[3],
            social_status: v[4],
            age: v[5],
            human_count: v[6],
            species: v[7],
        }
    }
}

/// Summed features of a group, ordered as [`ATTRIBUTES`].
pub fn group_features(table: &[CharacterTraits], roster: &[String]) -> Result<[f64; 6], Rejection> {
    let mut f = [0.0; 6];
    for name in roster {
        let c = table
            .iter()
            .find(|c| &c.name == name)
            .ok_or_else(|| Rejection::new("unknown_character", format!("unknown character `{name}`")))?;
        f[0] += c.gender;
        f[1] += c.age;
        f[2] += c.status;
        f[3] += c.fitness;
        f[4] += if c.human { 1.0 } else { 0.0 };
        f[5] += if c.human { 1.0 } else { -1.0 };
    }
    Ok(f)
}

/// Per-term contributions to the logit of saving group 1: `group`,
/// `intervention`, then one entry per attribute.
pub fn moral_logit_terms(
    coeffs: &MoralCoeffs,
    table: &[CharacterTraits],
    group1: &[String],
    group2: &[String],
    intervention: Intervention,
) -> Result<Vec<(&'static str, f64)>, Rejection> {
    let f1 = group_features(table, group1)?;
    let f2 = group_features(table, group2)?;
    let mut terms = vec![("group", coeffs.group), ("intervention", coeffs.intervention * intervention.score())];
    for ((name, beta), (a, b)) in ATTRIBUTES.iter().zip(coeffs.attributes()).zip(f1.iter().zip(f2)) {
        terms.push((name, beta * (a - b)));
    }
    Ok(terms)
}

/// Probability of saving group 1.
pub fn moral_choice_prob(
    coeffs: &MoralCoeffs,
    table: &[CharacterTraits],
    group1: &[String],
    group2: &[String],
    intervention: Intervention,
) -> Result<f64, Rejection> {
    let terms = moral_logit_terms(coeffs, table, group1, group2, intervention)?;
    Ok(logistic(terms.iter().map(|(_, v)| v).sum()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoralPriors {
    pub group: DistributionSpec,
    pub intervention: DistributionSpec,
    pub gender: DistributionSpec,
    pub fitness: DistributionSpec,
    pub social_status: DistributionSpec,
    pub age: DistributionSpec,
    pub human_count: DistributionSpec,
    pub species: DistributionSpec,
}

impl MoralPriors {
    fn all(&self) -> [&DistributionSpec; 8] {
        [
            &self.group,
            &self.intervention,
            &self.gender,
            &self.fitness,
            &self.social_status,
            &self.age,
            &self.human_count,
            &self.species,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoralConfig {
    pub max_group_size: usize,
    pub characters: Vec<CharacterTraits>,
    pub priors: MoralPriors,
}

impl Default for MoralConfig {
    fn default() -> Self {
        let u = DistributionSpec::Uniform { low: -1.0, high: 1.0 };
        MoralConfig {
            max_group_size: 5,
            characters: default_characters(),
            priors: MoralPriors {
                group: u.clone(),
                intervention: u.clone(),
                gender: u.clone(),
                fitness: u.clone(),
                social_status: u.clone(),
                age: u.clone(),
                human_count: u.clone(),
                species: u,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoralLatents {
    pub coefficients: MoralCoeffs,
}

fn lat(l: &Latents) -> &MoralLatents {
    match l {
        Latents::MoralMachines(x) => x,
        other => panic!("moral_machines given latents for another environment: {other:?}"),
    }
}

fn parts(d: &Design) -> (&[String], &[String], Intervention) {
    match d {
        Design::MoralMachines { group1, group2, intervention } => (group1, group2, *intervention),
        other => panic!("moral_machines given design for `{}`", other.env()),
    }
}

impl MoralConfig {
    pub fn prob(&self, latents: &Latents, design: &Design) -> f64 {
        let (g1, g2, i) = parts(design);
        moral_choice_prob(&lat(latents).coefficients, &self.characters, g1, g2, i)
            .expect("design checked before use")
    }

    fn random_group(&self, rng: &mut RngState) -> Vec<String> {
        let n = 1 + rng.index(self.max_group_size);
        (0..n).map(|_| self.characters[rng.index(self.characters.len())].name.clone()).collect()
    }
}

impl Environment for MoralConfig {
    fn id(&self) -> EnvId {
        EnvId::MoralMachines
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.max_group_size == 0 {
            return Err(ConfigError::invalid("max_group_size", "must be at least 1"));
        }
        if self.characters.is_empty() {
            return Err(ConfigError::invalid("characters", "table must not be empty"));
        }
        for (i, c) in self.characters.iter().enumerate() {
            if self.characters[..i].iter().any(|d| d.name == c.name) {
                return Err(ConfigError::invalid("characters", format!("duplicate character `{}`", c.name)));
            }
            if c.name.is_empty() || c.name.contains(|ch: char| ch == '+' || ch == ',' || ch.is_whitespace()) {
                return Err(ConfigError::invalid("characters", format!("bad character name `{}`", c.name)));
            }
            if ![c.gender, c.age, c.status, c.fitness].iter().all(|v| v.is_finite()) {
                return Err(ConfigError::invalid("characters", format!("non-finite feature for `{}`", c.name)));
            }
        }
        for (name, p) in self.priors() {
            check_prior(name, p)?;
        }
        Ok(())
    }

    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)> {
        MoralCoeffs::NAMES.iter().copied().zip(self.priors.all()).collect()
    }

    fn sample_latents(&self, rng: &mut RngState) -> Latents {
        let mut v = [0.0; 8];
        for (slot, p) in v.iter_mut().zip(self.priors.all()) {
            *slot = p.draw(rng).expect("validated prior");
        }
        Latents::MoralMachines(MoralLatents { coefficients: MoralCoeffs::from_values(v) })
    }

    fn check_design(&self, design: &Design) -> Result<(), Rejection> {
        let Design::MoralMachines { group1, group2, .. } = design else {
            return Err(Rejection::wrong_env(self.id(), design));
        };
        for (label, g) in [("group1", group1), ("group2", group2)] {
            if g.is_empty() || g.len() > self.max_group_size {
                return Err(Rejection::new(
                    "group_size",
                    format!("{label} must have between 1 and {} characters, got {}", self.max_group_size, g.len()),
                ));
            }
            group_features(&self.characters, g)?;
        }
        Ok(())
    }

    fn random_design(&self, rng: &mut RngState) -> Design {
        let group1 = self.random_group(rng);
        let group2 = self.random_group(rng);
        let intervention = if rng.uniform() < 0.5 { Intervention::Swerve } else { Intervention::Stay };
        Design::MoralMachines { group1, group2, intervention }
    }

    fn default_design(&self) -> Design {
        let first = self.characters[0].name.clone();
        let last = self.characters[self.characters.len() - 1].name.clone();
        Design::MoralMachines { group1: vec![first], group2: vec![last], intervention: Intervention::Stay }
    }

    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome {
        Outcome::Choice(if rng.uniform() < self.prob(latents, design) { 1 } else { 2 })
    }

    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64 {
        let p = self.prob(latents, design);
        match outcome {
            Outcome::Choice(1) => libm::log(p),
            Outcome::Choice(2) => libm::log1p(-p),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Expected group number, `2 − p(save group 1)`.
    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64> {
        vec![2.0 - self.prob(latents, design)]
    }

    fn outcome_support(&self, _design: &Design) -> Option<Vec<Outcome>> {
        Some(vec![Outcome::Choice(1), Outcome::Choice(2)])
    }

    fn target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(2.0 - binary_class(self.prob(latents, d))),
            _ => panic!("moral_machines cannot answer {input:?}"),
        }
    }

    fn sample_target(&self, _goal: GoalId, latents: &Latents, input: &QueryInput, rng: &mut RngState) -> Value {
        match input {
            QueryInput::Design(d) => Value::Scalar(self.simulate(latents, d, rng).values()[0]),
            _ => panic!("moral_machines cannot answer {input:?}"),
        }
    }

    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)> {
        let c = lat(latents).coefficients;
        MoralCoeffs::NAMES.iter().zip(c.values()).map(|(n, v)| (format!("beta_{n}"), v)).collect()
    }

    fn from_summary(&self, values: &[(String, f64)], _template: &Latents) -> Option<Latents> {
        let mut v = [0.0; 8];
        for (slot, n) in v.iter_mut().zip(MoralCoeffs::NAMES) {
            *slot = lookup(values, &format!("beta_{n}"))?;
        }
        Some(Latents::MoralMachines(MoralLatents { coefficients: MoralCoeffs::from_values(v) }))
    }

    fn describe(&self, framing: Framing) -> EnvDescription {
        let names: Vec<&str> = self.characters.iter().map(|c| c.name.as_str()).collect();
        let roster = names.join(", ");
        let n = self.max_group_size;
        let text = match framing {
            Framing::Prior => format!(
                "A self-driving car must decide between two outcomes, each involving the death of a \
                 different group of characters. You describe group 1 (the passengers) and group 2 (the \
                 pedestrians), each with 1 to {n} characters drawn from: {roster}. You also choose the \
                 intervention the car would take to save group 1 (`swerve` or `stay`). A participant \
                 says which group they would save and why."
            ),
            Framing::NoPrior => format!(
                "You choose two lists of 1 to {n} tokens each, drawn from: {roster}, and a mode \
                 (`swerve` or `stay`). The system returns a text response naming list 1 or list 2."
            ),
        };
        EnvDescription {
            env: self.id(),
            framing,
            text,
            design_fields: vec![
                FieldSpec::choice("group1", "roster", &names),
                FieldSpec::choice("group2", "roster", &names),
                FieldSpec::choice("intervention", "choice", &["swerve", "stay"]),
            ],
            observation: String::from("free-text decision naming group 1 or group 2"),
            observation_units: String::new(),
        }
    }

    fn verbal_context(&self, latents: &Latents, design: &Design) -> Vec<(String, f64)> {
        let (g1, g2, i) = parts(design);
        let Ok(terms) = moral_logit_terms(&lat(latents).coefficients, &self.characters, g1, g2, i) else {
            return Vec::new();
        };
        let mut out: Vec<(String, f64)> = terms.into_iter().map(|(n, v)| (String::from(n), v)).collect();
        if let (Ok(f1), Ok(f2)) = (group_features(&self.characters, g1), group_features(&self.characters, g2)) {
            for (name, (a, b)) in ATTRIBUTES.iter().zip(f1.iter().zip(f2)) {
                out.push((format!("delta_{name}"), a - b));
            }
        }
        out
    }
}
