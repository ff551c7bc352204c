use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AgentError, AgentInfo, SeedPlan};
use crate::env::{
    class_of, Design, EnvConfig, EnvDescription, EpisodeState, ErrorFn, GoalSpec, Latents, Observation,
    PublicContext, QueryInput, Rejection, Value,
};
use crate::eval::{prior_predictive_stats, EvalError, ParticleSet};
use crate::prob::RngState;

/// Everything a scientist is told up front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intro {
    pub description: EnvDescription,
    pub goal: GoalSpec,
    pub goal_prompt: String,
    pub public: PublicContext,
    pub checkpoints: Vec<usize>,
    pub queries_per_checkpoint: usize,
    pub retry_limit: u32,
    /// Set in discovery episodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation_budget: Option<usize>,
}

/// Everything a novice is told: framing and the explanation, never history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoviceBrief {
    pub description: EnvDescription,
    pub goal: GoalSpec,
    pub goal_prompt: String,
    pub explanation: String,
}

pub trait Agent {
    fn info(&self) -> AgentInfo;
    fn begin(&mut self, _intro: &Intro) -> Result<(), AgentError> {
        Ok(())
    }
    /// Next design; `rejection` explains why the previous attempt failed.
    fn propose(&mut self, step: usize, rejection: Option<&Rejection>) -> Result<Design, AgentError>;
    fn observe(&mut self, _design: &Design, _observation: &Observation) {}
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError>;
    fn explain(&mut self, _budget: usize) -> Result<String, AgentError> {
        Ok(String::new())
    }
}

pub trait Novice {
    fn info(&self) -> AgentInfo;
    fn begin(&mut self, brief: &NoviceBrief) -> Result<(), AgentError>;
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError>;
}

/// `name=value` lines; anything else is ignored.
pub fn parse_explanation(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter_map(|line| {
            let (k, v) = line.split_once('=')?;
            let v = f64::from_str(v.trim()).ok().filter(|v| v.is_finite())?;
            Some((String::from(k.trim()), v))
        })
        .collect()
}

fn render_summary(values: &[(String, f64)]) -> String {
    values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Importance-sampling posterior over prior draws, refit at every question.
#[derive(Clone, Debug)]
pub struct PosteriorPredictor {
    config: EnvConfig,
    goal: GoalSpec,
    public: PublicContext,
    history: Vec<(Design, Observation)>,
    particles: usize,
    rng: RngState,
    fits: u64,
}

impl PosteriorPredictor {
    pub fn new(config: EnvConfig, goal: GoalSpec, particles: usize, rng: RngState) -> Self {
        PosteriorPredictor {
            config,
            goal,
            public: PublicContext::None,
            history: Vec::new(),
            particles: particles.max(1),
            rng,
            fits: 0,
        }
    }

    pub fn set_public(&mut self, public: PublicContext) {
        self.public = public;
    }

    pub fn observe(&mut self, design: &Design, observation: &Observation) {
        self.history.push((design.clone(), observation.clone()));
    }

    pub fn posterior(&mut self) -> ParticleSet {
        let mut rng = self.rng.substream("posterior", self.fits);
        self.fits += 1;
        ParticleSet::from_public(self.config.env(), &self.public, &self.history, self.particles, &mut rng)
    }

    /// Posterior mean of each target; binary goals take the majority class.
    pub fn predict(&mut self, queries: &[QueryInput]) -> Vec<Value> {
        let set = self.posterior();
        let env = self.config.env();
        queries
            .iter()
            .map(|q| {
                let mut m = set.mean_of(|theta| env.target(self.goal.goal, theta, q).as_slice().to_vec());
                if self.goal.error_fn == ErrorFn::ZeroOne {
                    m.iter_mut().for_each(|x| *x = class_of(*x));
                }
                Value::from_vec(m, self.goal.is_vector())
            })
            .collect()
    }

    /// Posterior mean of every summarized latent, as `name=value` lines.
    pub fn explain(&mut self) -> String {
        let set = self.posterior();
        let env = self.config.env();
        let names: Vec<String> = env.summarize(&set.particles()[0]).into_iter().map(|(k, _)| k).collect();
        let means = set.mean_of(|theta| env.summarize(theta).into_iter().map(|(_, v)| v).collect());
        render_summary(&names.into_iter().zip(means).collect::<Vec<_>>())
    }
}

/// Uniform random designs, posterior-mean predictions.
pub struct RandomAgent {
    config: EnvConfig,
    rng: RngState,
    posterior: PosteriorPredictor,
}

impl RandomAgent {
    pub fn new(config: EnvConfig, goal: GoalSpec, particles: usize, rng: RngState) -> Self {
        let posterior = PosteriorPredictor::new(config.clone(), goal, particles, rng.substream("predict", 0));
        RandomAgent { config, rng: rng.substream("designs", 0), posterior }
    }
}

impl Agent for RandomAgent {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("random")
    }
    fn begin(&mut self, intro: &Intro) -> Result<(), AgentError> {
        self.posterior.set_public(intro.public.clone());
        Ok(())
    }
    fn propose(&mut self, _step: usize, _rejection: Option<&Rejection>) -> Result<Design, AgentError> {
        Ok(self.config.env().random_design(&mut self.rng))
    }
    fn observe(&mut self, design: &Design, observation: &Observation) {
        self.posterior.observe(design, observation);
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        Ok(self.posterior.predict(queries))
    }
    fn explain(&mut self, _budget: usize) -> Result<String, AgentError> {
        Ok(self.posterior.explain())
    }
}

/// Repeats the environment's default design, posterior-mean predictions.
pub struct FixedDesignAgent {
    design: Design,
    posterior: PosteriorPredictor,
}

impl FixedDesignAgent {
    pub fn new(config: EnvConfig, goal: GoalSpec, particles: usize, rng: RngState) -> Self {
        let design = config.env().default_design();
        FixedDesignAgent { design, posterior: PosteriorPredictor::new(config, goal, particles, rng) }
    }
}

impl Agent for FixedDesignAgent {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("fixed_design")
    }
    fn begin(&mut self, intro: &Intro) -> Result<(), AgentError> {
        self.posterior.set_public(intro.public.clone());
        Ok(())
    }
    fn propose(&mut self, _step: usize, _rejection: Option<&Rejection>) -> Result<Design, AgentError> {
        Ok(self.design.clone())
    }
    fn observe(&mut self, design: &Design, observation: &Observation) {
        self.posterior.observe(design, observation);
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        Ok(self.posterior.predict(queries))
    }
    fn explain(&mut self, _budget: usize) -> Result<String, AgentError> {
        Ok(self.posterior.explain())
    }
}

/// Always predicts the prior-predictive mean.
pub struct Mu0Agent {
    config: EnvConfig,
    mu0: Value,
    rng: RngState,
}

impl Mu0Agent {
    pub fn new(config: EnvConfig, mu0: Value, rng: RngState) -> Self {
        Mu0Agent { config, mu0, rng }
    }
}

impl Agent for Mu0Agent {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("mu0_predictor")
    }
    fn propose(&mut self, _step: usize, _rejection: Option<&Rejection>) -> Result<Design, AgentError> {
        Ok(self.config.env().random_design(&mut self.rng))
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        Ok(queries.iter().map(|_| self.mu0.clone()).collect())
    }
}

/// Reads the true latents. For tests and noise-floor references only.
pub struct OracleAgent {
    config: EnvConfig,
    goal: GoalSpec,
    latents: Latents,
    rng: RngState,
}

impl OracleAgent {
    pub fn new(config: EnvConfig, goal: GoalSpec, latents: Latents, rng: RngState) -> Self {
        OracleAgent { config, goal, latents, rng }
    }
}

impl Agent for OracleAgent {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("oracle_theta")
    }
    fn propose(&mut self, _step: usize, _rejection: Option<&Rejection>) -> Result<Design, AgentError> {
        Ok(self.config.env().random_design(&mut self.rng))
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        let env = self.config.env();
        Ok(queries.iter().map(|q| env.target(self.goal.goal, &self.latents, q)).collect())
    }
    fn explain(&mut self, _budget: usize) -> Result<String, AgentError> {
        Ok(render_summary(&self.config.env().summarize(&self.latents)))
    }
}

/// Plays back fixed answers.
#[derive(Clone, Debug, Default)]
pub struct ScriptedAgent {
    pub identity: String,
    pub designs: Vec<Design>,
    pub predictions: Vec<Vec<Value>>,
    pub explanation: String,
    next_design: usize,
    next_predictions: usize,
}

impl ScriptedAgent {
    pub fn new(identity: impl Into<String>, designs: Vec<Design>, predictions: Vec<Vec<Value>>) -> Self {
        ScriptedAgent { identity: identity.into(), designs, predictions, ..Default::default() }
    }
}

impl Agent for ScriptedAgent {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process(self.identity.clone())
    }
    fn propose(&mut self, _step: usize, _rejection: Option<&Rejection>) -> Result<Design, AgentError> {
        let d = self.designs.get(self.next_design).cloned();
        self.next_design += 1;
        d.ok_or_else(|| AgentError::Failed(String::from("script has no more designs")))
    }
    fn predict(&mut self, _queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        let p = self.predictions.get(self.next_predictions).cloned();
        self.next_predictions += 1;
        p.ok_or_else(|| AgentError::Failed(String::from("script has no more predictions")))
    }
    fn explain(&mut self, _budget: usize) -> Result<String, AgentError> {
        Ok(self.explanation.clone())
    }
}

/// Plugs `name=value` lines from the explanation into the model; predicts
/// the prior-predictive mean when they do not name every latent.
pub struct ParametricNovice {
    config: EnvConfig,
    goal: GoalSpec,
    fallback: Value,
    template: Latents,
    latents: Option<Latents>,
}

impl ParametricNovice {
    pub fn new(config: EnvConfig, goal: GoalSpec, fallback: Value, rng: &mut RngState) -> Self {
        let template = config.env().sample_latents(rng);
        ParametricNovice { config, goal, fallback, template, latents: None }
    }

    pub fn understood(&self) -> bool {
        self.latents.is_some()
    }
}

impl Novice for ParametricNovice {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("parametric")
    }
    fn begin(&mut self, brief: &NoviceBrief) -> Result<(), AgentError> {
        let values = parse_explanation(&brief.explanation);
        self.latents = self.config.env().from_summary(&values, &self.template);
        Ok(())
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        let env = self.config.env();
        Ok(queries
            .iter()
            .map(|q| match &self.latents {
                Some(l) => env.target(self.goal.goal, l, q),
                None => self.fallback.clone(),
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    FixedDesign,
    Mu0Predictor,
    OracleTheta,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::Random, BaselineKind::FixedDesign, BaselineKind::Mu0Predictor, BaselineKind::OracleTheta];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::FixedDesign => "fixed_design",
            BaselineKind::Mu0Predictor => "mu0_predictor",
            BaselineKind::OracleTheta => "oracle_theta",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown baseline agent `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoviceKind {
    Parametric,
    Mu0Predictor,
}

impl FromStr for NoviceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "parametric" => Ok(NoviceKind::Parametric),
            "mu0_predictor" => Ok(NoviceKind::Mu0Predictor),
            _ => Err(format!("unknown novice `{s}`")),
        }
    }
}

/// Builds an in-process scientist seeded from the plan's agent stream.
/// `prior_samples` must match the trial settings for the μ₀ baseline to
/// score exactly zero.
pub fn baseline_agent(
    kind: BaselineKind,
    config: &EnvConfig,
    goal: &GoalSpec,
    plan: SeedPlan,
    particles: usize,
    prior_samples: usize,
) -> Result<alloc::boxed::Box<dyn Agent + Send>, EvalError> {
    let rng = plan.agent();
    Ok(match kind {
        BaselineKind::Random => alloc::boxed::Box::new(RandomAgent::new(config.clone(), goal.clone(), particles, rng)),
        BaselineKind::FixedDesign => {
            alloc::boxed::Box::new(FixedDesignAgent::new(config.clone(), goal.clone(), particles, rng))
        }
        BaselineKind::Mu0Predictor => {
            let stats = prior_predictive_stats(config, goal, prior_samples, &plan.master())?;
            alloc::boxed::Box::new(Mu0Agent::new(config.clone(), stats.mu0, rng))
        }
        BaselineKind::OracleTheta => {
            let episode = EpisodeState::reset(config.clone(), plan.episode())?;
            alloc::boxed::Box::new(OracleAgent::new(config.clone(), goal.clone(), episode.latents().clone(), rng))
        }
    })
}

pub fn baseline_novice(
    kind: NoviceKind,
    config: &EnvConfig,
    goal: &GoalSpec,
    plan: SeedPlan,
    prior_samples: usize,
) -> Result<alloc::boxed::Box<dyn Novice + Send>, EvalError> {
    let stats = prior_predictive_stats(config, goal, prior_samples, &plan.master())?;
    let mut rng = plan.agent().substream("novice", 0);
    let novice = ParametricNovice::new(config.clone(), goal.clone(), stats.mu0, &mut rng);
    Ok(match kind {
        NoviceKind::Parametric => alloc::boxed::Box::new(novice),
        NoviceKind::Mu0Predictor => alloc::boxed::Box::new(Mu0Novice(novice)),
    })
}

/// Ignores the explanation.
struct Mu0Novice(ParametricNovice);

impl Novice for Mu0Novice {
    fn info(&self) -> AgentInfo {
        AgentInfo::in_process("mu0_predictor")
    }
    fn begin(&mut self, _brief: &NoviceBrief) -> Result<(), AgentError> {
        Ok(())
    }
    fn predict(&mut self, queries: &[QueryInput]) -> Result<Vec<Value>, AgentError> {
        self.0.predict(queries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explanation_lines() {
        let v = parse_explanation("k = 0.5\nnoise\nalpha=2e-1\nbad=x\ninf=inf\n");
        assert_eq!(v, alloc::vec![(String::from("k"), 0.5), (String::from("alpha"), 0.2)]);
    }

    #[test]
    fn baseline_names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("gpt".parse::<BaselineKind>().is_err());
    }
}
