//! The ten generative environments.
//!
//! Each environment is a prior over latent parameters plus a simulator
//! `p(y | latents, design)`. They share one object-safe interface,
//! [`Environment`], reached from an [`EnvConfig`] via [`EnvConfig::env`].
//! An [`EpisodeState`] is one sampled instance that agents experiment on.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;
use thiserror::Error;

use crate::num::Real;
use crate::prob::{DistributionSpec, RngState};

mod death;
mod dugongs;
mod emotions;
mod goals;
mod hyperbolic;
mod irt;
mod location;
mod mastectomy;
mod moral;
mod peregrines;
mod predator_prey;
pub mod verbalize;

pub use death::{death_eta, DeathConfig, DeathLatents, DeathPriors};
pub use dugongs::{dugong_mean_length, DugongConfig, DugongLatents, DugongPriors};
pub use emotions::{
    emotion_means, likert_pmf, EmotionCoefficients, EmotionConfig, EmotionLatents, EmotionPriors,
    EMOTIONS,
};
pub use goals::{class_of, goal_queries, ErrorFn, GoalSpec, Query, QueryInput, TargetKind, Value};
pub use hyperbolic::{hd_choice_prob, HyperbolicConfig, HyperbolicLatents, HyperbolicPriors};
pub use irt::{irt_correct_prob, IrtConfig, IrtLatents, IrtPriors, IrtVariant};
pub use location::{loc_signal_mean, LocationConfig, LocationLatents, LocationPriors};
pub use mastectomy::{
    mastectomy_death_prob, MastectomyConfig, MastectomyLatents, MastectomyPriors, Patient,
};
pub use moral::{
    default_characters, group_features, moral_choice_prob, moral_logit_terms, CharacterTraits, Intervention, MoralCoeffs, MoralConfig, MoralLatents,
    MoralPriors,
};
pub use peregrines::{peregrine_log_rate, PeregrineConfig, PeregrineLatents, PeregrinePriors};
pub use predator_prey::{
    lv_integrate, lv_integrate_real, LvOverflow, LvParams, PredatorPreyConfig, PredatorPreyLatents,
    PredatorPreyPriors,
};

/// Environment identifiers; the string forms are the registry keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    LocationFinding,
    HyperbolicDiscounting,
    DeathProcess,
    Irt,
    Dugongs,
    Peregrines,
    Mastectomy,
    PredatorPrey,
    Emotions,
    MoralMachines,
}

impl EnvId {
    pub const ALL: [EnvId; 10] = [
        EnvId::LocationFinding,
        EnvId::HyperbolicDiscounting,
        EnvId::DeathProcess,
        EnvId::Irt,
        EnvId::Dugongs,
        EnvId::Peregrines,
        EnvId::Mastectomy,
        EnvId::PredatorPrey,
        EnvId::Emotions,
        EnvId::MoralMachines,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::LocationFinding => "location_finding",
            EnvId::HyperbolicDiscounting => "hyperbolic_discounting",
            EnvId::DeathProcess => "death_process",
            EnvId::Irt => "irt",
            EnvId::Dugongs => "dugongs",
            EnvId::Peregrines => "peregrines",
            EnvId::Mastectomy => "mastectomy",
            EnvId::PredatorPrey => "predator_prey",
            EnvId::Emotions => "emotions",
            EnvId::MoralMachines => "moral_machines",
        }
    }

    /// Goals in registry order; the first is the default.
    pub fn goals(self) -> &'static [GoalId] {
        use GoalId::*;
        match self {
            EnvId::LocationFinding => &[Signal, SourceLocation],
            EnvId::HyperbolicDiscounting => &[Choice, DiscountFactor],
            EnvId::DeathProcess => &[NumInfected, InfectionRate],
            EnvId::Irt => &[Correctness],
            EnvId::Dugongs => &[Length],
            EnvId::Peregrines => &[Population],
            EnvId::Mastectomy => &[Survival],
            EnvId::PredatorPrey => &[Population],
            EnvId::Emotions => &[EmotionLikert],
            EnvId::MoralMachines => &[MoralJudgement],
        }
    }

    pub fn default_goal(self) -> GoalId {
        self.goals()[0]
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownEnv(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalId {
    Signal,
    SourceLocation,
    Choice,
    DiscountFactor,
    NumInfected,
    InfectionRate,
    Correctness,
    Length,
    Population,
    Survival,
    EmotionLikert,
    MoralJudgement,
}

impl GoalId {
    pub fn as_str(self) -> &'static str {
        match self {
            GoalId::Signal => "signal",
            GoalId::SourceLocation => "source_location",
            GoalId::Choice => "choice",
            GoalId::DiscountFactor => "discount_factor",
            GoalId::NumInfected => "num_infected",
            GoalId::InfectionRate => "infection_rate",
            GoalId::Correctness => "correctness",
            GoalId::Length => "length",
            GoalId::Population => "population",
            GoalId::Survival => "survival",
            GoalId::EmotionLikert => "emotion_likert",
            GoalId::MoralJudgement => "moral_judgement",
        }
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoalId {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use GoalId::*;
        [
            Signal,
            SourceLocation,
            Choice,
            DiscountFactor,
            NumInfected,
            InfectionRate,
            Correctness,
            Length,
            Population,
            Survival,
            EmotionLikert,
            MoralJudgement,
        ]
        .into_iter()
        .find(|g| g.as_str() == s)
        .ok_or_else(|| ConfigError::UnknownGoal(s.to_string()))
    }
}

/// Every `env/goal` registry key, in order.
pub fn registry() -> Vec<(EnvId, GoalId)> {
    EnvId::ALL
        .into_iter()
        .flat_map(|e| e.goals().iter().map(move |g| (e, *g)))
        .collect()
}

/// Parses `"env/goal"` or a bare env id (default goal).
pub fn parse_registry_key(key: &str) -> Result<(EnvId, GoalId), ConfigError> {
    let (env, goal) = match key.split_once('/') {
        Some((e, g)) => {
            let env: EnvId = e.parse()?;
            (env, g.parse()?)
        }
        None => {
            let env: EnvId = key.parse()?;
            (env, env.default_goal())
        }
    };
    if !env.goals().contains(&goal) {
        return Err(ConfigError::UnknownGoal(format!("{env}/{goal}")));
    }
    Ok((env, goal))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }
}

pub(crate) fn check_prior(name: &str, spec: &DistributionSpec) -> Result<(), ConfigError> {
    spec.validate()
        .map_err(|e| ConfigError::invalid(format!("priors.{name}"), e.to_string()))
}

/// Which framing text agents see.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    /// Domain-rich description.
    #[default]
    Prior,
    /// Domain-scrubbed description.
    NoPrior,
}

/// Per-environment model settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum ModelConfig {
    LocationFinding(LocationConfig),
    HyperbolicDiscounting(HyperbolicConfig),
    DeathProcess(DeathConfig),
    Irt(IrtConfig),
    Dugongs(DugongConfig),
    Peregrines(PeregrineConfig),
    Mastectomy(MastectomyConfig),
    PredatorPrey(PredatorPreyConfig),
    Emotions(EmotionConfig),
    MoralMachines(MoralConfig),
}

/// Full environment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(default)]
    pub framing: Framing,
    pub model: ModelConfig,
}

impl EnvConfig {
    /// Documented defaults for `id`.
    pub fn default_for(id: EnvId) -> Self {
        let model = match id {
            EnvId::LocationFinding => ModelConfig::LocationFinding(LocationConfig::default()),
            EnvId::HyperbolicDiscounting => {
                ModelConfig::HyperbolicDiscounting(HyperbolicConfig::default())
            }
            EnvId::DeathProcess => ModelConfig::DeathProcess(DeathConfig::default()),
            EnvId::Irt => ModelConfig::Irt(IrtConfig::default()),
            EnvId::Dugongs => ModelConfig::Dugongs(DugongConfig::default()),
            EnvId::Peregrines => ModelConfig::Peregrines(PeregrineConfig::default()),
            EnvId::Mastectomy => ModelConfig::Mastectomy(MastectomyConfig::default()),
            EnvId::PredatorPrey => ModelConfig::PredatorPrey(PredatorPreyConfig::default()),
            EnvId::Emotions => ModelConfig::Emotions(EmotionConfig::default()),
            EnvId::MoralMachines => ModelConfig::MoralMachines(MoralConfig::default()),
        };
        EnvConfig { framing: Framing::Prior, model }
    }

    pub fn with_framing(mut self, framing: Framing) -> Self {
        self.framing = framing;
        self
    }

    pub fn id(&self) -> EnvId {
        self.env().id()
    }

    pub fn env(&self) -> &dyn Environment {
        match &self.model {
            ModelConfig::LocationFinding(c) => c,
            ModelConfig::HyperbolicDiscounting(c) => c,
            ModelConfig::DeathProcess(c) => c,
            ModelConfig::Irt(c) => c,
            ModelConfig::Dugongs(c) => c,
            ModelConfig::Peregrines(c) => c,
            ModelConfig::Mastectomy(c) => c,
            ModelConfig::PredatorPrey(c) => c,
            ModelConfig::Emotions(c) => c,
            ModelConfig::MoralMachines(c) => c,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env().validate()
    }
}

/// An experiment input, tagged by environment.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Design {
    LocationFinding {
        #[serde_as(as = "Vec<Real>")]
        point: Vec<f64>,
    },
    HyperbolicDiscounting {
        #[serde_as(as = "Real")]
        ir: f64,
        #[serde_as(as = "Real")]
        dr: f64,
        #[serde_as(as = "Real")]
        delay: f64,
    },
    DeathProcess {
        #[serde_as(as = "Real")]
        time: f64,
    },
    Irt { student: usize, question: usize },
    Dugongs {
        #[serde_as(as = "Real")]
        age: f64,
    },
    Peregrines {
        #[serde_as(as = "Real")]
        time: f64,
    },
    Mastectomy { patient: usize },
    PredatorPrey {
        #[serde_as(as = "Real")]
        time: f64,
    },
    Emotions {
        #[serde_as(as = "[Real; 3]")]
        prizes: [f64; 3],
        #[serde_as(as = "[Real; 3]")]
        probs: [f64; 3],
        /// 1-based index of the prize the wheel landed on.
        outcome: u8,
    },
    MoralMachines { group1: Vec<String>, group2: Vec<String>, intervention: Intervention },
}

impl Design {
    pub fn env(&self) -> EnvId {
        match self {
            Design::LocationFinding { .. } => EnvId::LocationFinding,
            Design::HyperbolicDiscounting { .. } => EnvId::HyperbolicDiscounting,
            Design::DeathProcess { .. } => EnvId::DeathProcess,
            Design::Irt { .. } => EnvId::Irt,
            Design::Dugongs { .. } => EnvId::Dugongs,
            Design::Peregrines { .. } => EnvId::Peregrines,
            Design::Mastectomy { .. } => EnvId::Mastectomy,
            Design::PredatorPrey { .. } => EnvId::PredatorPrey,
            Design::Emotions { .. } => EnvId::Emotions,
            Design::MoralMachines { .. } => EnvId::MoralMachines,
        }
    }

    /// Content hash, used to give every distinct design its own estimator
    /// substream regardless of where it appears in a list.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::new(self.env() as u64);
        match self {
            Design::LocationFinding { point } => point.iter().for_each(|x| h.real(*x)),
            Design::HyperbolicDiscounting { ir, dr, delay } => {
                h.real(*ir);
                h.real(*dr);
                h.real(*delay);
            }
            Design::DeathProcess { time }
            | Design::Peregrines { time }
            | Design::PredatorPrey { time } => h.real(*time),
            Design::Dugongs { age } => h.real(*age),
            Design::Irt { student, question } => {
                h.word(*student as u64);
                h.word(*question as u64);
            }
            Design::Mastectomy { patient } => h.word(*patient as u64),
            Design::Emotions { prizes, probs, outcome } => {
                prizes.iter().chain(probs.iter()).for_each(|x| h.real(*x));
                h.word(*outcome as u64);
            }
            Design::MoralMachines { group1, group2, intervention } => {
                for (tag, group) in [(1u64, group1), (2, group2)] {
                    h.word(tag);
                    group.iter().for_each(|c| h.text(c));
                }
                h.word(*intervention as u64);
            }
        }
        h.finish()
    }

    /// Parses `key=value` pairs separated by commas or whitespace, e.g.
    /// `t=2.5`, `ir=10,dr=20,d=5`, `group1=boy+girl group2=dog intervention=stay`.
    pub fn parse_kv(env: EnvId, text: &str) -> Result<Design, Rejection> {
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Rejection::new("parse_error", format!("expected key=value, got `{tok}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let get = |keys: &[&str]| -> Result<&str, Rejection> {
            pairs
                .iter()
                .find(|(k, _)| keys.contains(k))
                .map(|(_, v)| *v)
                .ok_or_else(|| Rejection::new("missing_field", format!("missing `{}`", keys[0])))
        };
        let real = |keys: &[&str]| -> Result<f64, Rejection> {
            let v = get(keys)?;
            v.parse::<f64>()
                .map_err(|_| Rejection::new("parse_error", format!("`{}` is not a number: `{v}`", keys[0])))
        };
        let int = |keys: &[&str]| -> Result<usize, Rejection> {
            let v = get(keys)?;
            v.parse::<usize>().map_err(|_| {
                Rejection::new("parse_error", format!("`{}` is not a non-negative integer: `{v}`", keys[0]))
            })
        };
        let roster = |keys: &[&str]| -> Result<Vec<String>, Rejection> {
            Ok(get(keys)?.split('+').filter(|s| !s.is_empty()).map(String::from).collect())
        };
        Ok(match env {
            EnvId::LocationFinding => {
                let mut point = Vec::new();
                for i in 0.. {
                    let keys: [&str; 2] = match i {
                        0 => ["x", "x0"],
                        1 => ["y", "x1"],
                        _ => break,
                    };
                    match real(&keys) {
                        Ok(v) => point.push(v),
                        Err(e) if i == 0 => return Err(e),
                        Err(_) => break,
                    }
                }
                let mut i = point.len();
                while let Some((_, v)) = pairs.iter().find(|(k, _)| *k == format!("x{i}")) {
                    point.push(v.parse().map_err(|_| Rejection::new("parse_error", format!("x{i} is not a number")))?);
                    i += 1;
                }
                Design::LocationFinding { point }
            }
            EnvId::HyperbolicDiscounting => Design::HyperbolicDiscounting {
                ir: real(&["ir", "iR"])?,
                dr: real(&["dr", "dR"])?,
                delay: real(&["d", "D", "delay", "days"])?,
            },
            EnvId::DeathProcess => Design::DeathProcess { time: real(&["t", "time"])? },
            EnvId::Irt => Design::Irt { student: int(&["student", "s"])?, question: int(&["question", "q"])? },
            EnvId::Dugongs => Design::Dugongs { age: real(&["age", "x"])? },
            EnvId::Peregrines => Design::Peregrines { time: real(&["t", "time"])? },
            EnvId::Mastectomy => Design::Mastectomy { patient: int(&["patient", "p"])? },
            EnvId::PredatorPrey => Design::PredatorPrey { time: real(&["t", "time"])? },
            EnvId::Emotions => {
                let outcome = int(&["outcome"])?;
                Design::Emotions {
                    prizes: [real(&["v1"])?, real(&["v2"])?, real(&["v3"])?],
                    probs: [real(&["p1"])?, real(&["p2"])?, real(&["p3"])?],
                    outcome: u8::try_from(outcome).unwrap_or(u8::MAX),
                }
            }
            EnvId::MoralMachines => Design::MoralMachines {
                group1: roster(&["group1", "g1"])?,
                group2: roster(&["group2", "g2"])?,
                intervention: get(&["intervention", "i"])?.parse()?,
            },
        })
    }
}

struct Fingerprint(u64);

impl Fingerprint {
    fn new(seed: u64) -> Self {
        Fingerprint(0xCBF2_9CE4_8422_2325 ^ seed)
    }
    fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    fn real(&mut self, x: f64) {
        // -0.0 and 0.0 are the same design
        self.word(if x == 0.0 { 0 } else { x.to_bits() });
    }
    fn text(&mut self, s: &str) {
        s.bytes().for_each(|b| self.word(b as u64));
        self.word(0xFF);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// An experiment outcome.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Real(#[serde_as(as = "Real")] f64),
    Count(u64),
    Binary(u8),
    Pair { prey: u64, predators: u64 },
    Likert([u8; 8]),
    /// Group saved (1 or 2).
    Choice(u8),
}

impl Outcome {
    /// Numeric payload as a flat vector.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Outcome::Real(x) => alloc::vec![*x],
            Outcome::Count(c) => alloc::vec![*c as f64],
            Outcome::Binary(b) => alloc::vec![*b as f64],
            Outcome::Pair { prey, predators } => alloc::vec![*prey as f64, *predators as f64],
            Outcome::Likert(v) => v.iter().map(|x| *x as f64).collect(),
            Outcome::Choice(g) => alloc::vec![*g as f64],
        }
    }

    /// Canonical text rendering for environments without a verbalizer.
    pub fn render(&self) -> String {
        match self {
            Outcome::Real(x) => format!("{x}"),
            Outcome::Count(c) => format!("{c}"),
            Outcome::Binary(b) => format!("{b}"),
            Outcome::Pair { prey, predators } => format!("prey={prey}, predators={predators}"),
            Outcome::Likert(v) => {
                let parts: Vec<String> = EMOTIONS
                    .iter()
                    .zip(v.iter())
                    .map(|(name, x)| format!("{name}={x}"))
                    .collect();
                parts.join(", ")
            }
            Outcome::Choice(g) => format!("group {g}"),
        }
    }
}

/// An outcome plus its rendered text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub outcome: Outcome,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Machine-readable design rejection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{reason}")]
pub struct Rejection {
    pub code: String,
    pub reason: String,
}

impl Rejection {
    pub fn new(code: &str, reason: impl Into<String>) -> Self {
        Rejection { code: code.to_string(), reason: reason.into() }
    }

    pub(crate) fn wrong_env(expected: EnvId, got: &Design) -> Self {
        Rejection::new(
            "wrong_environment",
            format!("design is for `{}` but this environment is `{expected}`", got.env()),
        )
    }

    pub(crate) fn out_of_range(name: &str, low: f64, high: f64, value: f64) -> Self {
        Rejection::new(
            "out_of_range",
            format!("{name} must lie in [{low}, {high}], got {value}"),
        )
    }
}

pub(crate) fn check_range(name: &str, value: f64, low: f64, high: f64) -> Result<(), Rejection> {
    if value.is_finite() && value >= low && value <= high {
        Ok(())
    } else {
        Err(Rejection::out_of_range(name, low, high, value))
    }
}

/// Sampled latent parameters, tagged by environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Latents {
    LocationFinding(LocationLatents),
    HyperbolicDiscounting(HyperbolicLatents),
    DeathProcess(DeathLatents),
    Irt(IrtLatents),
    Dugongs(DugongLatents),
    Peregrines(PeregrineLatents),
    Mastectomy(MastectomyLatents),
    PredatorPrey(PredatorPreyLatents),
    Emotions(EmotionLatents),
    MoralMachines(MoralLatents),
}

/// Observable setup drawn at reset that agents are shown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PublicContext {
    None,
    Patients(Vec<Patient>),
}

/// One design input as described to agents.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    /// `real`, `integer`, `roster` or `choice`.
    pub kind: String,
    #[serde_as(as = "Option<Real>")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde_as(as = "Option<Real>")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub units: String,
}

impl FieldSpec {
    pub(crate) fn real(name: &str, low: f64, high: f64, units: &str) -> Self {
        FieldSpec {
            name: name.into(),
            kind: "real".into(),
            low: Some(low),
            high: Some(high),
            choices: Vec::new(),
            units: units.into(),
        }
    }
    pub(crate) fn integer(name: &str, low: f64, high: f64) -> Self {
        FieldSpec { kind: "integer".into(), ..Self::real(name, low, high, "") }
    }
    pub(crate) fn choice(name: &str, kind: &str, choices: &[&str]) -> Self {
        FieldSpec {
            name: name.into(),
            kind: kind.into(),
            low: None,
            high: None,
            choices: choices.iter().map(|c| String::from(*c)).collect(),
            units: String::new(),
        }
    }
}

/// What agents are told about an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvDescription {
    pub env: EnvId,
    pub framing: Framing,
    pub text: String,
    pub design_fields: Vec<FieldSpec>,
    pub observation: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub observation_units: String,
}

/// Uniform interface over the ten environments.
///
/// Methods taking a [`Design`] or [`Latents`] of another environment panic;
/// designs from outside must pass [`Environment::check_design`] first.
pub trait Environment: Sync {
    fn id(&self) -> EnvId;
    fn validate(&self) -> Result<(), ConfigError>;
    /// Named prior for every latent symbol.
    fn priors(&self) -> Vec<(&'static str, &DistributionSpec)>;
    fn sample_latents(&self, rng: &mut RngState) -> Latents;
    /// Redraws hidden parameters, keeping setup that agents can observe.
    fn resample_hidden(&self, _context: &Latents, rng: &mut RngState) -> Latents {
        self.sample_latents(rng)
    }
    /// Prior draw consistent with what agents were shown at reset.
    fn prior_given_public(&self, _public: &PublicContext, rng: &mut RngState) -> Latents {
        self.sample_latents(rng)
    }
    fn check_design(&self, design: &Design) -> Result<(), Rejection>;
    /// Uniform draw from the design space.
    fn random_design(&self, rng: &mut RngState) -> Design;
    /// A fixed, valid design near the middle of the design space.
    fn default_design(&self) -> Design;
    fn simulate(&self, latents: &Latents, design: &Design, rng: &mut RngState) -> Outcome;
    fn log_likelihood(&self, latents: &Latents, design: &Design, outcome: &Outcome) -> f64;
    /// Analytic E[y | latents, design], flattened.
    fn mean_outcome(&self, latents: &Latents, design: &Design) -> Vec<f64>;
    /// Finite outcome support, when small enough to enumerate.
    fn outcome_support(&self, _design: &Design) -> Option<Vec<Outcome>> {
        None
    }
    /// True when the simulator has no observation noise.
    fn is_deterministic(&self) -> bool {
        false
    }
    /// Noiseless goal target for a query.
    fn target(&self, goal: GoalId, latents: &Latents, input: &QueryInput) -> Value;
    /// Simulated (noisy) goal outcome for a query, used for prior-predictive statistics.
    fn sample_target(
        &self,
        goal: GoalId,
        latents: &Latents,
        input: &QueryInput,
        rng: &mut RngState,
    ) -> Value;
    /// Query input for a design-based goal.
    fn query_input(&self, _goal: GoalId, _latents: &Latents, rng: &mut RngState) -> QueryInput {
        QueryInput::Design(self.random_design(rng))
    }
    /// Flat named view of the latents.
    fn summarize(&self, latents: &Latents) -> Vec<(String, f64)>;
    /// Inverse of [`Environment::summarize`] where every name is present.
    /// Observable setup (the mastectomy cohort) is copied from `template`.
    fn from_summary(&self, values: &[(String, f64)], template: &Latents) -> Option<Latents>;
    fn public_context(&self, _latents: &Latents) -> PublicContext {
        PublicContext::None
    }
    fn describe(&self, framing: Framing) -> EnvDescription;
    /// Numerical warnings raised by a simulation at this design.
    fn observation_flags(&self, _latents: &Latents, _design: &Design) -> Vec<&'static str> {
        Vec::new()
    }
    /// Named logit contributions handed to the verbalizer; empty for most environments.
    fn verbal_context(&self, _latents: &Latents, _design: &Design) -> Vec<(String, f64)> {
        Vec::new()
    }
}

pub(crate) fn lookup(values: &[(String, f64)], name: &str) -> Option<f64> {
    values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
}

pub(crate) fn binary_class(p: f64) -> f64 {
    if p > 0.5 {
        1.0
    } else {
        0.0
    }
}

/// One environment instance.
#[derive(Clone, Debug)]
pub struct EpisodeState {
    config: EnvConfig,
    latents: Latents,
    history: Vec<(Design, Observation)>,
    rng: RngState,
}

impl EpisodeState {
    /// Samples latents from the prior. Draws come from substreams of `rng`:
    /// `latents:0` at reset and `experiment:<step>` per experiment.
    pub fn reset(config: EnvConfig, rng: RngState) -> Result<Self, ConfigError> {
        config.validate()?;
        let latents = config.env().sample_latents(&mut rng.substream("latents", 0));
        Ok(EpisodeState { config, latents, history: Vec::new(), rng })
    }

    /// Runs one experiment with the template verbalizer.
    pub fn experiment(&mut self, design: &Design) -> Result<Observation, Rejection> {
        self.experiment_with(design, &verbalize::TemplateVerbalizer)
    }

    pub fn experiment_with(
        &mut self,
        design: &Design,
        verbalizer: &dyn verbalize::Verbalizer,
    ) -> Result<Observation, Rejection> {
        let env = self.config.env();
        env.check_design(design)?;
        let step = self.history.len() as u64;
        let mut rng = self.rng.substream("experiment", step);
        let outcome = env.simulate(&self.latents, design, &mut rng);
        let mut flags: Vec<String> =
            env.observation_flags(&self.latents, design).into_iter().map(String::from).collect();
        let text = match env.id() {
            EnvId::Emotions | EnvId::MoralMachines => {
                let req = verbalize::VerbalizeRequest {
                    design,
                    outcome: &outcome,
                    context: env.verbal_context(&self.latents, design),
                };
                match verbalizer.verbalize(&req) {
                    Ok(t) => t,
                    Err(_) => {
                        flags.push(String::from("verbalizer_fallback"));
                        verbalize::template(&req)
                    }
                }
            }
            _ => outcome.render(),
        };
        let obs = Observation { outcome, text, flags };
        self.history.push((design.clone(), obs.clone()));
        Ok(obs)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }
    pub fn env(&self) -> &dyn Environment {
        self.config.env()
    }
    pub fn latents(&self) -> &Latents {
        &self.latents
    }
    pub fn history(&self) -> &[(Design, Observation)] {
        &self.history
    }
    pub fn rng(&self) -> &RngState {
        &self.rng
    }
}

/// Convenience: reset with a fresh boxed environment config.
pub fn env_reset(config: &EnvConfig, rng: RngState) -> Result<EpisodeState, ConfigError> {
    EpisodeState::reset(config.clone(), rng)
}

/// Boxed list of every default config, in registry order.
pub fn default_configs() -> Vec<Box<EnvConfig>> {
    EnvId::ALL.into_iter().map(|id| Box::new(EnvConfig::default_for(id))).collect()
}
