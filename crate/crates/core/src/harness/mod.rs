//! Episode orchestration: checkpointed trials, scientist-to-novice discovery
//! episodes, in-process baseline agents, replay and aggregation.
//!
//! [`TrialSession`] is a passive state machine. Drivers such as [`run_trial`]
//! or a wire transport ask it what is [`Pending`] and submit answers.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use thiserror::Error;

use crate::env::{ConfigError, Rejection};
use crate::eval::{EigParams, EvalError};
use crate::prob::RngState;

mod agents;
mod record;
mod report;
mod run;
mod session;

pub use agents::{
    baseline_agent, baseline_novice, parse_explanation, Agent, BaselineKind, FixedDesignAgent, Intro, Mu0Agent,
    Novice, NoviceBrief, NoviceKind, OracleAgent, ParametricNovice, PosteriorPredictor, RandomAgent,
    ScriptedAgent,
};
pub use record::{
    Call, CallLogEntry, CheckpointRecord, DiscoveryRecord, EigRecord, ExplanationRecord, NoviceRecord,
    RejectedAttempt, Role, RunRecord, Runtime, StepRecord, TrialRecord, TrialStatus, SCHEMA_VERSION,
};
pub use report::{aggregate, AggregateRow, Stat};
pub use run::{drive, replay, run_discovery, run_trial};
pub use session::{DesignResult, Mode, Pending, TrialSession};

/// Observation counts at which agents are quizzed.
pub const DEFAULT_CHECKPOINTS: [usize; 6] = [0, 1, 3, 5, 7, 10];
pub const DEFAULT_QUERIES: usize = 10;
pub const DEFAULT_RETRY_LIMIT: u32 = 3;
pub const DEFAULT_EXPLANATION_BUDGET: usize = 2000;
pub const DEFAULT_TIMEOUT_MS: u64 = 120_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    InProcess,
    Stdio,
    Http,
}

/// Who is answering and how many bad designs in a row it may send. The
/// transport is kept in the record's runtime section, so the same agent
/// yields the same record over any transport.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub identity: String,
    pub retry_limit: u32,
}

impl AgentInfo {
    pub fn new(identity: impl Into<String>) -> Self {
        AgentInfo { identity: identity.into(), retry_limit: DEFAULT_RETRY_LIMIT }
    }

    pub fn in_process(identity: impl Into<String>) -> Self {
        Self::new(identity)
    }

    /// Consecutive rejections that end the trial; a limit of 0 behaves as 1.
    pub fn max_rejections(&self) -> u32 {
        self.retry_limit.max(1)
    }
}

/// Episode `run` of a numbered experiment. Environment draws come from
/// `run:<run>` of the master stream; prior-predictive statistics from the
/// master stream itself, so all runs of a plan share them.
#[serde_as]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    #[serde_as(as = "DisplayFromStr")]
    pub master_seed: u64,
    pub run: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64, run: u64) -> Self {
        SeedPlan { master_seed, run }
    }
    pub fn master(&self) -> RngState {
        RngState::new(self.master_seed)
    }
    pub fn episode(&self) -> RngState {
        self.master().substream("run", self.run)
    }
    /// Private stream for an in-process agent.
    pub fn agent(&self) -> RngState {
        self.master().substream("agent", self.run)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conditioning {
    /// Every step's design is scored under the prior.
    Prior,
    /// Step `i` is scored under a particle posterior given steps `0..i`.
    Posterior { particles: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigSettings {
    pub params: EigParams,
    /// Random comparison designs for EI regret; 0 skips regret.
    pub n_random: usize,
    pub conditioning: Conditioning,
}

impl Default for EigSettings {
    fn default() -> Self {
        EigSettings { params: EigParams::default(), n_random: 100, conditioning: Conditioning::Prior }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub checkpoints: Vec<usize>,
    pub queries_per_checkpoint: usize,
    /// Draws behind μ₀ and σ₀.
    pub prior_samples: usize,
    pub explanation_budget: usize,
    pub timeout_ms: u64,
    /// `None` skips design scoring.
    pub eig: Option<EigSettings>,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings {
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            queries_per_checkpoint: DEFAULT_QUERIES,
            prior_samples: 10_000,
            explanation_budget: DEFAULT_EXPLANATION_BUDGET,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            eig: Some(EigSettings::default()),
        }
    }
}

impl TrialSettings {
    pub fn without_eig(mut self) -> Self {
        self.eig = None;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.checkpoints.is_empty() {
            return Err(HarnessError::Settings(String::from("at least one checkpoint is required")));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Settings(String::from("checkpoints must be strictly increasing")));
        }
        if self.queries_per_checkpoint == 0 {
            return Err(HarnessError::Settings(String::from("queries_per_checkpoint must be at least 1")));
        }
        if self.prior_samples < 2 {
            return Err(HarnessError::Settings(String::from("prior_samples must be at least 2")));
        }
        if let Some(e) = &self.eig {
            if e.params.n_outer == 0 || e.params.m_inner == 0 {
                return Err(HarnessError::Settings(String::from("EIG sample counts must be at least 1")));
            }
            if let Conditioning::Posterior { particles: 0 } = e.conditioning {
                return Err(HarnessError::Settings(String::from("posterior conditioning needs particles")));
            }
        }
        Ok(())
    }

    /// Experiments in a complete trial.
    pub fn steps(&self) -> usize {
        self.checkpoints.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent did not answer within {0} ms")]
    Timeout(u64),
    /// A design answer that could not be read as a design.
    #[error("unreadable design: {}", .rejection)]
    Unreadable { raw: String, rejection: Rejection },
    #[error("agent failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("expected {expected}, got {got}")]
    OutOfTurn { expected: &'static str, got: &'static str },
    #[error("bad predictions: {0}")]
    BadPredictions(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("replay diverged: {0}")]
    Replay(String),
}
