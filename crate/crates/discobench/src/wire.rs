//! Newline-delimited JSON messages shared by the stdio and HTTP transports.

use discobench_core::env::{Design, EnvId, Framing, Observation, QueryInput, Value};
use discobench_core::harness::{Intro, NoviceBrief, Pending};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Hello,
    EnvDescription,
    ExperimentRequest,
    ExperimentResult,
    InvalidDesign,
    QueryBatch,
    PredictionBatch,
    ExplainRequest,
    Explanation,
    TrialDone,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default)]
    pub session: String,
    #[serde(default)]
    pub step: usize,
    #[serde(default)]
    pub payload: serde_json::Value,
    pub schema_version: String,
}

impl WireMessage {
    pub fn new(kind: MessageType, session: &str, step: usize, payload: impl Serialize) -> Self {
        WireMessage {
            kind,
            session: session.to_string(),
            step,
            payload: serde_json::to_value(payload).expect("payloads serialize"),
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    /// Reads a payload, reporting the offending field on failure.
    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, String> {
        let payload = if self.payload.is_null() { serde_json::json!({}) } else { self.payload.clone() };
        serde_path_to_error::deserialize(payload).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                e.inner().to_string()
            } else {
                format!("{path}: {}", e.inner())
            }
        })
    }
}

/// What the session waits for after a reply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Next {
    Hello,
    Experiment,
    Predictions,
    Explanation,
    NovicePredictions,
    Done,
}

impl Next {
    pub fn of(p: &Pending) -> Next {
        match p {
            Pending::Experiment { .. } => Next::Experiment,
            Pending::Predictions { .. } => Next::Predictions,
            Pending::Explanation { .. } => Next::Explanation,
            Pending::NovicePredictions { .. } => Next::NovicePredictions,
            Pending::Done => Next::Done,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeMode {
    Trial,
    Discovery,
}

#[serde_as]
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    /// `env` or `env/goal`.
    #[serde(default)]
    pub env: Option<String>,
    #[serde(default)]
    pub goal: Option<String>,
    #[serde_as(as = "Option<PickFirst<(DisplayFromStr, _)>>")]
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub run: Option<u64>,
    #[serde(default)]
    pub framing: Option<Framing>,
    #[serde(default)]
    pub mode: Option<EpisodeMode>,
    #[serde(default)]
    pub agent: Option<String>,
    #[serde(default)]
    pub novice: Option<String>,
    #[serde(default)]
    pub retry_limit: Option<u32>,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub queries_per_checkpoint: Option<usize>,
    #[serde(default)]
    pub explanation_budget: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvDescriptionPayload {
    #[serde(flatten)]
    pub intro: Intro,
    pub next: Next,
}

/// A design as a tagged object (the tag may be left out) or as `key=value` text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRequest {
    pub design: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_token: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub design: Design,
    pub observation: Observation,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub units: String,
    pub next: Next,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvalidDesign {
    pub code: String,
    pub reason: String,
    /// Consecutive rejections so far.
    pub rejections: u32,
    pub retries_left: u32,
    pub next: Next,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Scientist,
    Novice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<usize>,
    pub prompt: String,
    pub arity: usize,
    pub queries: Vec<QueryInput>,
    /// Novice batches only: everything the novice may know.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brief: Option<NoviceBrief>,
    pub next: Next,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionBatch {
    pub predictions: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionReceipt {
    pub role: Role,
    pub accepted: usize,
    pub next: Next,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainRequest {
    pub budget: usize,
    pub next: Next,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationText {
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReceipt {
    pub submitted_chars: usize,
    pub delivered_chars: usize,
    pub truncated: bool,
    pub next: Next,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub step: usize,
    #[serde_as(as = "discobench_core::num::Real")]
    pub standardized_error: f64,
}

#[serde_as]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialDone {
    pub env: EnvId,
    pub goal: String,
    /// `complete`, `retry_exhausted`, `timed_out` or `aborted`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub experiments: usize,
    pub checkpoints: Vec<CheckpointSummary>,
    #[serde_as(as = "Option<discobench_core::num::Real>")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novice_error: Option<f64>,
    pub next: Next,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
    /// The offending input line, for malformed messages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<String>,
    pub next: Next,
}
