use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::agents::{Intro, NoviceBrief};
use super::record::*;
use super::{AgentInfo, Conditioning, HarnessError, SeedPlan, TrialSettings};
use crate::env::verbalize::{TemplateVerbalizer, Verbalizer, TEMPLATE_VERSION};
use crate::env::{
    goal_queries, Design, EnvConfig, EpisodeState, GoalId, GoalSpec, Observation, Query, QueryInput, Rejection, Value,
};
use crate::eval::{
    design_eig, ei_regret, prior_predictive_stats, standardized_error, LatentSource, ParticleSet,
    PriorPredictiveStats,
};

/// What the session is waiting for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pending {
    Experiment {
        step: usize,
        attempt: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rejection: Option<Rejection>,
    },
    Predictions { checkpoint: usize, queries: Vec<QueryInput> },
    Explanation { budget: usize },
    NovicePredictions { queries: Vec<QueryInput> },
    Done,
}

impl Pending {
    fn name(&self) -> &'static str {
        match self {
            Pending::Experiment { .. } => "a design",
            Pending::Predictions { .. } => "predictions",
            Pending::Explanation { .. } => "an explanation",
            Pending::NovicePredictions { .. } => "novice predictions",
            Pending::Done => "nothing",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DesignResult {
    Observed(Observation),
    /// The agent may try again.
    Rejected(Rejection),
    /// Too many rejections in a row; the trial is over.
    Exhausted(Rejection),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Trial,
    Discovery { novice: AgentInfo },
}

/// One trial or discovery episode in progress.
pub struct TrialSession {
    goal: GoalSpec,
    settings: TrialSettings,
    plan: SeedPlan,
    agent: AgentInfo,
    mode: Mode,
    episode: EpisodeState,
    stats: PriorPredictiveStats,
    verbalizer: Box<dyn Verbalizer + Send>,
    verbalizer_name: String,
    pending: Pending,
    steps: Vec<StepRecord>,
    rejected: Vec<RejectedAttempt>,
    checkpoints: Vec<CheckpointRecord>,
    open_queries: Vec<Query>,
    status: Option<TrialStatus>,
    call_log: Vec<CallLogEntry>,
    explanation: Option<ExplanationRecord>,
    novice: Option<NoviceRecord>,
    novice_log: Vec<CallLogEntry>,
}

impl TrialSession {
    pub fn new(
        config: EnvConfig,
        goal: GoalId,
        settings: TrialSettings,
        plan: SeedPlan,
        agent: AgentInfo,
        mode: Mode,
    ) -> Result<Self, HarnessError> {
        settings.validate()?;
        config.validate()?;
        let goal = GoalSpec::new(&config, goal)?;
        let stats = prior_predictive_stats(&config, &goal, settings.prior_samples, &plan.master())?;
        let episode = EpisodeState::reset(config, plan.episode())?;
        let mut s = TrialSession {
            goal,
            settings,
            plan,
            agent,
            mode,
            episode,
            stats,
            verbalizer: Box::new(TemplateVerbalizer),
            verbalizer_name: format!("template/v{TEMPLATE_VERSION}"),
            pending: Pending::Done,
            steps: Vec::new(),
            rejected: Vec::new(),
            checkpoints: Vec::new(),
            open_queries: Vec::new(),
            status: None,
            call_log: Vec::new(),
            explanation: None,
            novice: None,
            novice_log: Vec::new(),
        };
        s.advance();
        Ok(s)
    }

    /// Replaces the template verbalizer; `name` goes into the record.
    pub fn with_verbalizer(mut self, verbalizer: Box<dyn Verbalizer + Send>, name: impl Into<String>) -> Self {
        self.verbalizer = verbalizer;
        self.verbalizer_name = name.into();
        self
    }

    pub fn pending(&self) -> &Pending {
        &self.pending
    }
    pub fn goal(&self) -> &GoalSpec {
        &self.goal
    }
    pub fn config(&self) -> &EnvConfig {
        self.episode.config()
    }
    pub fn settings(&self) -> &TrialSettings {
        &self.settings
    }
    pub fn plan(&self) -> SeedPlan {
        self.plan
    }
    pub fn agent(&self) -> &AgentInfo {
        &self.agent
    }
    pub fn mode(&self) -> &Mode {
        &self.mode
    }
    pub fn stats(&self) -> &PriorPredictiveStats {
        &self.stats
    }
    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }
    pub fn checkpoints(&self) -> &[CheckpointRecord] {
        &self.checkpoints
    }
    pub fn status(&self) -> Option<&TrialStatus> {
        self.status.as_ref()
    }
    pub fn is_done(&self) -> bool {
        self.pending == Pending::Done
    }
    /// The episode itself, including latents. Not for agents.
    pub fn episode(&self) -> &EpisodeState {
        &self.episode
    }

    /// What the scientist is told before the first question.
    pub fn intro(&self) -> Intro {
        let config = self.episode.config();
        Intro {
            description: config.env().describe(config.framing),
            goal: self.goal.clone(),
            goal_prompt: self.goal.prompt(config.framing),
            public: config.env().public_context(self.episode.latents()),
            checkpoints: self.settings.checkpoints.clone(),
            queries_per_checkpoint: self.settings.queries_per_checkpoint,
            retry_limit: self.agent.retry_limit,
            explanation_budget: match self.mode {
                Mode::Discovery { .. } => Some(self.settings.explanation_budget),
                Mode::Trial => None,
            },
        }
    }

    /// What the novice is told; available once an explanation is in.
    pub fn novice_brief(&self) -> Option<NoviceBrief> {
        let e = self.explanation.as_ref()?;
        let config = self.episode.config();
        Some(NoviceBrief {
            description: config.env().describe(config.framing),
            goal: self.goal.clone(),
            goal_prompt: self.goal.prompt(config.framing),
            explanation: e.text.clone(),
        })
    }

    fn expect(&self, want: &'static str) -> Result<(), HarnessError> {
        if self.pending.name() == want {
            Ok(())
        } else {
            Err(HarnessError::OutOfTurn { expected: self.pending.name(), got: want })
        }
    }

    fn log(&mut self, role: Role, call: Call) {
        match role {
            Role::Novice => self.novice_log.push(CallLogEntry { role, call }),
            _ => self.call_log.push(CallLogEntry { role, call }),
        }
    }

    fn attempt(&self) -> (usize, u32) {
        (self.steps.len(), self.rejected.len() as u32)
    }

    pub fn submit_design(&mut self, design: Design) -> Result<DesignResult, HarnessError> {
        self.expect("a design")?;
        let (step, attempt) = self.attempt();
        self.log(Role::Scientist, Call::Design { step, attempt, design: design.clone() });
        let verbalizer = &*self.verbalizer;
        match self.episode.experiment_with(&design, verbalizer) {
            Ok(observation) => {
                let rejected = core::mem::take(&mut self.rejected);
                self.steps.push(StepRecord { step, design, observation: observation.clone(), rejected });
                self.advance();
                Ok(DesignResult::Observed(observation))
            }
            Err(rejection) => Ok(self.reject(RejectedAttempt { design: Some(design), raw: None, rejection })),
        }
    }

    /// Records a design answer that could not be parsed.
    pub fn submit_unreadable(&mut self, raw: String, rejection: Rejection) -> Result<DesignResult, HarnessError> {
        self.expect("a design")?;
        let (step, attempt) = self.attempt();
        self.log(
            Role::Scientist,
            Call::UnreadableDesign { step, attempt, raw: raw.clone(), rejection: rejection.clone() },
        );
        Ok(self.reject(RejectedAttempt { design: None, raw: Some(raw), rejection }))
    }

    fn reject(&mut self, attempt: RejectedAttempt) -> DesignResult {
        let rejection = attempt.rejection.clone();
        self.rejected.push(attempt);
        if self.rejected.len() as u32 >= self.agent.max_rejections() {
            let rejected = core::mem::take(&mut self.rejected);
            self.end(TrialStatus::RetryExhausted { step: self.steps.len(), rejected });
            DesignResult::Exhausted(rejection)
        } else {
            self.pending = Pending::Experiment {
                step: self.steps.len(),
                attempt: self.rejected.len() as u32,
                rejection: Some(rejection.clone()),
            };
            DesignResult::Rejected(rejection)
        }
    }

    /// Scores a checkpoint. Malformed predictions leave the checkpoint open.
    pub fn submit_predictions(&mut self, predictions: Vec<Value>) -> Result<&CheckpointRecord, HarnessError> {
        self.expect("predictions")?;
        let Pending::Predictions { checkpoint, queries } = self.pending.clone() else { unreachable!() };
        match self.score(&predictions) {
            Ok((errors, standardized_error)) => {
                self.log(Role::Scientist, Call::Predictions { checkpoint, predictions: predictions.clone() });
                let truths = self.open_queries.drain(..).map(|q| q.truth).collect();
                self.checkpoints.push(CheckpointRecord {
                    step: checkpoint,
                    queries,
                    truths,
                    predictions,
                    errors,
                    standardized_error,
                });
                self.advance();
                Ok(self.checkpoints.last().expect("just pushed"))
            }
            Err(reason) => {
                self.log(Role::Scientist, Call::RejectedPredictions { checkpoint, predictions, reason: reason.clone() });
                Err(HarnessError::BadPredictions(reason))
            }
        }
    }

    fn score(&self, predictions: &[Value]) -> Result<(Vec<f64>, f64), String> {
        if predictions.len() != self.open_queries.len() {
            return Err(format!("expected {} predictions, got {}", self.open_queries.len(), predictions.len()));
        }
        let mut errors = Vec::with_capacity(predictions.len());
        for (i, (p, q)) in predictions.iter().zip(&self.open_queries).enumerate() {
            errors.push(self.goal.error(p, &q.truth).map_err(|e| format!("prediction {i}: {e}"))?);
        }
        let truths: Vec<Value> = self.open_queries.iter().map(|q| q.truth.clone()).collect();
        let z = standardized_error(&self.goal, predictions, &truths, &self.stats).map_err(|e| format!("{e}"))?;
        Ok((errors, z))
    }

    /// Records a prediction answer that could not be parsed. The checkpoint stays open.
    pub fn submit_unreadable_predictions(&mut self, raw: String, reason: String) -> Result<(), HarnessError> {
        let (role, checkpoint) = match &self.pending {
            Pending::Predictions { checkpoint, .. } => (Role::Scientist, *checkpoint),
            Pending::NovicePredictions { .. } => (Role::Novice, self.steps.len()),
            other => return Err(HarnessError::OutOfTurn { expected: other.name(), got: "predictions" }),
        };
        self.log(role, Call::UnreadablePredictions { checkpoint, raw, reason });
        Ok(())
    }

    /// Truncates to the budget in characters.
    pub fn submit_explanation(&mut self, text: String) -> Result<&ExplanationRecord, HarnessError> {
        self.expect("an explanation")?;
        self.log(Role::Scientist, Call::Explanation { text: text.clone() });
        let budget = self.settings.explanation_budget;
        let submitted_chars = text.chars().count();
        let truncated = submitted_chars > budget;
        let text = if truncated { text.chars().take(budget).collect() } else { text };
        self.explanation = Some(ExplanationRecord { text, budget, truncated, submitted_chars });
        self.advance();
        Ok(self.explanation.as_ref().expect("just set"))
    }

    pub fn submit_novice_predictions(&mut self, predictions: Vec<Value>) -> Result<&NoviceRecord, HarnessError> {
        self.expect("novice predictions")?;
        let Pending::NovicePredictions { queries } = self.pending.clone() else { unreachable!() };
        let Mode::Discovery { novice } = self.mode.clone() else { unreachable!() };
        match self.score(&predictions) {
            Ok((errors, standardized_error)) => {
                self.log(Role::Novice, Call::NovicePredictions { predictions: predictions.clone() });
                let truths = self.open_queries.drain(..).map(|q| q.truth).collect();
                self.novice = Some(NoviceRecord {
                    agent: novice,
                    queries,
                    truths,
                    predictions,
                    errors,
                    standardized_error,
                    call_log: core::mem::take(&mut self.novice_log),
                });
                self.advance();
                Ok(self.novice.as_ref().expect("just set"))
            }
            Err(reason) => {
                let checkpoint = self.steps.len();
                self.log(Role::Novice, Call::RejectedPredictions { checkpoint, predictions, reason: reason.clone() });
                Err(HarnessError::BadPredictions(reason))
            }
        }
    }

    /// Ends the episode early; it is kept but marked incomplete.
    pub fn abort(&mut self, reason: impl Into<String>) {
        if self.status.is_some() {
            return;
        }
        let reason = reason.into();
        self.log(Role::Harness, Call::Abort { reason: reason.clone() });
        self.end(TrialStatus::Aborted { reason });
    }

    /// Marks the current call as timed out.
    pub fn time_out(&mut self) {
        if self.status.is_none() {
            self.log(Role::Harness, Call::Abort { reason: String::from("timeout") });
            self.end(TrialStatus::TimedOut { step: self.steps.len() });
        }
    }

    fn end(&mut self, status: TrialStatus) {
        self.status = Some(status);
        self.pending = Pending::Done;
        self.open_queries.clear();
    }

    fn advance(&mut self) {
        if self.status.is_some() {
            self.pending = Pending::Done;
            return;
        }
        let h = self.steps.len();
        let asked = self.checkpoints.len();
        if self.settings.checkpoints.get(asked) == Some(&h) {
            let mut rng = self.plan.episode().substream("queries", h as u64);
            self.open_queries = self.queries(&mut rng);
            self.pending = Pending::Predictions {
                checkpoint: h,
                queries: self.open_queries.iter().map(|q| q.input.clone()).collect(),
            };
        } else if h < self.settings.steps() {
            self.pending = Pending::Experiment { step: h, attempt: 0, rejection: None };
        } else if matches!(self.mode, Mode::Discovery { .. }) && self.explanation.is_none() {
            self.pending = Pending::Explanation { budget: self.settings.explanation_budget };
        } else if matches!(self.mode, Mode::Discovery { .. }) && self.novice.is_none() {
            let mut rng = self.plan.episode().substream("novice_queries", 0);
            self.open_queries = self.queries(&mut rng);
            self.pending =
                Pending::NovicePredictions { queries: self.open_queries.iter().map(|q| q.input.clone()).collect() };
        } else {
            self.status = Some(TrialStatus::Complete);
            self.pending = Pending::Done;
        }
    }

    fn queries(&self, rng: &mut crate::prob::RngState) -> Vec<Query> {
        goal_queries(
            self.episode.env(),
            &self.goal,
            self.episode.latents(),
            self.settings.queries_per_checkpoint,
            rng,
        )
    }

    fn eig_record(&self) -> Option<EigRecord> {
        let settings = self.settings.eig?;
        let config = self.episode.config();
        let latents = self.episode.latents();
        let history = self.episode.history();
        let rng = self.plan.episode().substream("eig", 0);
        let mut record = EigRecord { conditioning: settings.conditioning, per_step: Vec::new(), regret: None, error: None };
        for (i, (design, _)) in history.iter().enumerate() {
            let est = match settings.conditioning {
                Conditioning::Prior => design_eig(
                    config,
                    design,
                    settings.params,
                    LatentSource::Prior { context: Some(latents) },
                    &rng.substream("step", i as u64),
                ),
                Conditioning::Posterior { particles } => {
                    let mut prng = rng.substream("particles", i as u64);
                    let set = ParticleSet::from_history(config.env(), latents, &history[..i], particles, &mut prng);
                    design_eig(config, design, settings.params, LatentSource::Particles(&set), &rng.substream("step", i as u64))
                }
            };
            match est {
                Ok(e) => record.per_step.push(e),
                Err(e) => {
                    record.error = Some(format!("{e}"));
                    return Some(record);
                }
            }
        }
        if settings.n_random > 0 && !history.is_empty() {
            let chosen: Vec<Design> = history.iter().map(|(d, _)| d.clone()).collect();
            match ei_regret(
                config,
                &chosen,
                settings.n_random,
                settings.params,
                LatentSource::Prior { context: Some(latents) },
                &rng.substream("regret", 0),
            ) {
                Ok(r) => record.regret = Some(r),
                Err(e) => record.error = Some(format!("{e}")),
            }
        }
        Some(record)
    }

    /// Closes the episode, scoring designs if configured. An episode still
    /// waiting on an agent is recorded as aborted.
    pub fn finish(mut self) -> RunRecord {
        if self.status.is_none() {
            self.abort("finished before completion");
        }
        let config = self.episode.config().clone();
        let trial = TrialRecord {
            schema_version: String::from(SCHEMA_VERSION),
            public: config.env().public_context(self.episode.latents()),
            latents: self.episode.latents().clone(),
            eig: self.eig_record(),
            config,
            goal: self.goal,
            seed_plan: self.plan,
            settings: self.settings,
            agent: self.agent,
            verbalizer: self.verbalizer_name,
            prior_predictive: self.stats,
            steps: self.steps,
            checkpoints: self.checkpoints,
            status: self.status.expect("set above"),
            call_log: self.call_log,
            runtime: None,
        };
        match self.mode {
            Mode::Trial => RunRecord::Trial(trial),
            Mode::Discovery { novice } => {
                let scientist_error = trial.final_error();
                RunRecord::Discovery(DiscoveryRecord {
                    scientist: trial,
                    novice_agent: novice,
                    explanation: self.explanation,
                    novice: self.novice,
                    scientist_error,
                })
            }
        }
    }
}
