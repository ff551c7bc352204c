use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::{AgentInfo, Conditioning, SeedPlan, TrialSettings, Transport};
use crate::env::{Design, EnvConfig, GoalSpec, Latents, Observation, PublicContext, QueryInput, Rejection, Value};
use crate::eval::{EigEstimate, PriorPredictiveStats, RegretReport};
use crate::num::Real;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Scientist,
    Novice,
    Harness,
}

/// One answer received from an agent, as submitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum Call {
    Design { step: usize, attempt: u32, design: Design },
    /// A design answer that never parsed.
    UnreadableDesign { step: usize, attempt: u32, raw: String, rejection: Rejection },
    Predictions { checkpoint: usize, predictions: Vec<Value> },
    RejectedPredictions { checkpoint: usize, predictions: Vec<Value>, reason: String },
    UnreadablePredictions { checkpoint: usize, raw: String, reason: String },
    Explanation { text: String },
    NovicePredictions { predictions: Vec<Value> },
    Abort { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CallLogEntry {
    pub role: Role,
    #[serde(flatten)]
    pub call: Call,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedAttempt {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Design>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    pub rejection: Rejection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub design: Design,
    pub observation: Observation,
    /// Invalid designs sent before this one was accepted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedAttempt>,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    /// Observations seen before the queries were asked.
    pub step: usize,
    pub queries: Vec<QueryInput>,
    pub truths: Vec<Value>,
    pub predictions: Vec<Value>,
    #[serde_as(as = "Vec<Real>")]
    pub errors: Vec<f64>,
    #[serde_as(as = "Real")]
    pub standardized_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialStatus {
    Complete,
    RetryExhausted { step: usize, rejected: Vec<RejectedAttempt> },
    TimedOut { step: usize },
    Aborted { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigRecord {
    pub conditioning: Conditioning,
    pub per_step: Vec<EigEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<RegretReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Facts about how a run was executed that do not affect its numbers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Runtime {
    pub transport: Transport,
    pub wall_clock_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: String,
    pub config: EnvConfig,
    pub goal: GoalSpec,
    pub seed_plan: SeedPlan,
    pub settings: TrialSettings,
    pub agent: AgentInfo,
    pub verbalizer: String,
    pub prior_predictive: PriorPredictiveStats,
    pub public: PublicContext,
    pub latents: Latents,
    pub steps: Vec<StepRecord>,
    pub checkpoints: Vec<CheckpointRecord>,
    #[serde(flatten)]
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<EigRecord>,
    pub call_log: Vec<CallLogEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<Runtime>,
}

impl TrialRecord {
    pub fn is_complete(&self) -> bool {
        self.status == TrialStatus::Complete
    }

    /// Standardized error at the checkpoint taken after `step` observations.
    pub fn error_at(&self, step: usize) -> Option<f64> {
        self.checkpoints.iter().find(|c| c.step == step).map(|c| c.standardized_error)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.standardized_error)
    }

    pub fn scored_predictions(&self) -> usize {
        self.checkpoints.iter().map(|c| c.predictions.len()).sum()
    }

    /// Copy with the execution facts cleared, for replay comparison.
    pub fn without_runtime(&self) -> TrialRecord {
        TrialRecord { runtime: None, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    /// As delivered to the novice, at most `budget` characters.
    pub text: String,
    pub budget: usize,
    pub truncated: bool,
    pub submitted_chars: usize,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoviceRecord {
    pub agent: AgentInfo,
    pub queries: Vec<QueryInput>,
    pub truths: Vec<Value>,
    pub predictions: Vec<Value>,
    #[serde_as(as = "Vec<Real>")]
    pub errors: Vec<f64>,
    #[serde_as(as = "Real")]
    pub standardized_error: f64,
    /// Everything the novice sent.
    pub call_log: Vec<CallLogEntry>,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryRecord {
    pub scientist: TrialRecord,
    pub novice_agent: AgentInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<ExplanationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novice: Option<NoviceRecord>,
    /// The scientist's own final error, for comparison.
    #[serde_as(as = "Option<Real>")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scientist_error: Option<f64>,
}

impl DiscoveryRecord {
    pub fn is_complete(&self) -> bool {
        self.scientist.is_complete() && self.novice.is_some()
    }

    pub fn discovery_error(&self) -> Option<f64> {
        self.novice.as_ref().map(|n| n.standardized_error)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunRecord {
    Trial(TrialRecord),
    Discovery(DiscoveryRecord),
}

impl RunRecord {
    pub fn trial(&self) -> &TrialRecord {
        match self {
            RunRecord::Trial(t) => t,
            RunRecord::Discovery(d) => &d.scientist,
        }
    }

    pub fn trial_mut(&mut self) -> &mut TrialRecord {
        match self {
            RunRecord::Trial(t) => t,
            RunRecord::Discovery(d) => &mut d.scientist,
        }
    }

    pub fn is_complete(&self) -> bool {
        match self {
            RunRecord::Trial(t) => t.is_complete(),
            RunRecord::Discovery(d) => d.is_complete(),
        }
    }

    pub fn without_runtime(&self) -> RunRecord {
        let mut r = self.clone();
        r.trial_mut().runtime = None;
        r
    }
}
