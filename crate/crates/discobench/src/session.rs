//! Protocol state for one wire session, shared by every transport.
//!
//! Each client message gets exactly one reply. When the session then waits
//! for something other than a design, a prompt follows the reply: a
//! `query_batch`, an `explain_request` or the closing `trial_done`.

use std::collections::HashMap;
use std::time::Instant;

use discobench_core::env::{parse_registry_key, Design, EnvConfig, EnvId, GoalId};
use discobench_core::harness::{
    AgentInfo, DesignResult, HarnessError, Mode, Pending, RunRecord, Runtime, SeedPlan, TrialSession, TrialSettings,
    TrialStatus, Transport,
};
use discobench_core::env::Rejection;

use crate::config::Config;
use crate::verbalizer::HttpVerbalizer;
use crate::wire::*;

/// Everything that fixes an episode's numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionSpec {
    pub config: EnvConfig,
    pub goal: GoalId,
    pub settings: TrialSettings,
    pub plan: SeedPlan,
    pub agent: AgentInfo,
    /// Set for discovery episodes.
    pub novice: Option<AgentInfo>,
    pub verbalizer: Option<(String, u64)>,
}

impl SessionSpec {
    /// Reads a hello against configured defaults.
    pub fn from_hello(config: &Config, hello: &Hello) -> Result<SessionSpec, String> {
        let env_key = hello.env.clone().unwrap_or_else(|| config.run.env.clone());
        let key = match hello.goal.as_ref().or(config.run.goal.as_ref()) {
            Some(g) if !env_key.contains('/') => format!("{env_key}/{g}"),
            _ => env_key,
        };
        let (env, goal) = parse_registry_key(&key).map_err(|e| e.to_string())?;
        let framing = hello.framing.unwrap_or(config.run.framing);
        let mut settings = config.trial_settings();
        if let Some(c) = &hello.checkpoints {
            settings.checkpoints = c.clone();
        }
        if let Some(q) = hello.queries_per_checkpoint {
            settings.queries_per_checkpoint = q;
        }
        if let Some(b) = hello.explanation_budget {
            settings.explanation_budget = b;
        }
        settings.validate().map_err(|e| e.to_string())?;
        let mut agent = AgentInfo::new(hello.agent.clone().unwrap_or_else(|| "client".into()));
        agent.retry_limit = hello.retry_limit.unwrap_or(config.trial.retry_limit);
        let novice = match hello.mode.unwrap_or(EpisodeMode::Trial) {
            EpisodeMode::Trial => None,
            EpisodeMode::Discovery => Some(AgentInfo::new(hello.novice.clone().unwrap_or_else(|| "client".into()))),
        };
        Ok(SessionSpec {
            config: config.env_config(env, framing),
            goal,
            settings,
            plan: SeedPlan::new(hello.seed.unwrap_or(config.run.seed), hello.run.unwrap_or(0)),
            agent,
            novice,
            verbalizer: config.verbalizer.url.clone().map(|u| (u, config.verbalizer.timeout_ms)),
        })
    }

    pub fn start(&self) -> Result<TrialSession, HarnessError> {
        let mode = match &self.novice {
            Some(n) => Mode::Discovery { novice: n.clone() },
            None => Mode::Trial,
        };
        let s = TrialSession::new(
            self.config.clone(),
            self.goal,
            self.settings.clone(),
            self.plan,
            self.agent.clone(),
            mode,
        )?;
        Ok(match &self.verbalizer {
            Some((url, timeout_ms)) => {
                s.with_verbalizer(Box::new(HttpVerbalizer::new(url, *timeout_ms)), format!("http:{url}"))
            }
            None => s,
        })
    }
}

enum State {
    AwaitHello,
    Running { session: Box<TrialSession>, units: String },
    Finished(Box<RunRecord>),
}

pub struct WireSession {
    id: String,
    config: Config,
    /// Fixed episode; a hello may only rename the agents.
    pinned: Option<SessionSpec>,
    transport: Transport,
    state: State,
    started: Instant,
    replies: HashMap<String, Vec<WireMessage>>,
}

fn msg(kind: MessageType, id: &str, step: usize, payload: impl serde::Serialize) -> WireMessage {
    WireMessage::new(kind, id, step, payload)
}

impl WireSession {
    pub fn new(id: impl Into<String>, config: Config, transport: Transport) -> Self {
        WireSession {
            id: id.into(),
            config,
            pinned: None,
            transport,
            state: State::AwaitHello,
            started: Instant::now(),
            replies: HashMap::new(),
        }
    }

    pub fn pinned(id: impl Into<String>, spec: SessionSpec, transport: Transport) -> Self {
        WireSession { pinned: Some(spec), ..Self::new(id, Config::default(), transport) }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, State::Finished(_))
    }

    pub fn record(&self) -> Option<&RunRecord> {
        match &self.state {
            State::Finished(r) => Some(r),
            _ => None,
        }
    }

    pub fn into_record(self) -> Option<RunRecord> {
        match self.state {
            State::Finished(r) => Some(*r),
            _ => None,
        }
    }

    fn step(&self) -> usize {
        match &self.state {
            State::Running { session, .. } => session.steps().len(),
            State::Finished(r) => r.trial().steps.len(),
            State::AwaitHello => 0,
        }
    }

    pub fn next(&self) -> Next {
        match &self.state {
            State::AwaitHello => Next::Hello,
            State::Running { session, .. } => Next::of(session.pending()),
            State::Finished(_) => Next::Done,
        }
    }

    fn error(&self, code: &str, message: impl Into<String>, echo: Option<String>) -> WireMessage {
        let payload = ErrorPayload { code: code.into(), message: message.into(), echo, next: self.next() };
        msg(MessageType::Error, &self.id, self.step(), payload)
    }

    /// Handles one input line; returns the output lines.
    pub fn handle_line(&mut self, line: &str) -> Vec<String> {
        let out = match serde_json::from_str::<WireMessage>(line) {
            Ok(m) => self.handle(m),
            Err(e) => vec![self.error("malformed", e.to_string(), Some(line.to_string()))],
        };
        out.iter().map(WireMessage::to_line).collect()
    }

    pub fn handle(&mut self, m: WireMessage) -> Vec<WireMessage> {
        if m.schema_version != SCHEMA_VERSION {
            let text = format!("schema_version `{}` is not supported; this server speaks `{SCHEMA_VERSION}`", m.schema_version);
            return vec![self.error("version_mismatch", text, None)];
        }
        if m.kind == MessageType::ExperimentRequest {
            let token = m.payload_as::<ExperimentRequest>().ok().and_then(|r| r.retry_token);
            if let Some(cached) = token.and_then(|t| self.replies.get(&t)) {
                return cached.clone();
            }
        }
        if let State::Finished(_) = self.state {
            return vec![self.error("session_finished", "the episode is over", None)];
        }
        match m.kind {
            MessageType::Hello => self.hello(&m),
            MessageType::ExperimentRequest => self.experiment(&m),
            MessageType::PredictionBatch => self.predictions(&m),
            MessageType::Explanation => self.explanation(&m),
            other => {
                let name = serde_json::to_value(other).expect("serializes");
                vec![self.error("unexpected_type", format!("servers do not accept {name}"), None)]
            }
        }
    }

    fn hello(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        if !matches!(self.state, State::AwaitHello) {
            return vec![self.error("out_of_turn", "session already started", None)];
        }
        let hello: Hello = match m.payload_as() {
            Ok(h) => h,
            Err(e) => return vec![self.error("bad_payload", e, None)],
        };
        let spec = match &self.pinned {
            Some(p) => {
                let mut p = p.clone();
                if let Some(a) = &hello.agent {
                    p.agent.identity = a.clone();
                }
                if let (Some(n), Some(name)) = (p.novice.as_mut(), &hello.novice) {
                    n.identity = name.clone();
                }
                Ok(p)
            }
            None => SessionSpec::from_hello(&self.config, &hello),
        };
        let session = match spec.and_then(|s| s.start().map_err(|e| e.to_string())) {
            Ok(s) => s,
            Err(e) => return vec![self.error("bad_hello", e, None)],
        };
        let intro = session.intro();
        let units = intro.description.observation_units.clone();
        self.started = Instant::now();
        self.state = State::Running { session: Box::new(session), units };
        let reply = msg(MessageType::EnvDescription, &self.id, 0, EnvDescriptionPayload { intro, next: self.next() });
        self.with_prompt(reply)
    }

    fn running(&mut self) -> Option<&mut TrialSession> {
        match &mut self.state {
            State::Running { session, .. } => Some(session),
            _ => None,
        }
    }

    fn experiment(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        let Some(session) = self.running() else {
            return vec![self.error("out_of_turn", "send hello first", None)];
        };
        if !matches!(session.pending(), Pending::Experiment { .. }) {
            return vec![self.error("out_of_turn", format!("expected {:?}", self.next()).to_lowercase(), None)];
        }
        let env = session.config().id();
        let req: ExperimentRequest = match m.payload_as() {
            Ok(r) => r,
            Err(e) => return vec![self.error("bad_payload", e, None)],
        };
        let session = self.running().expect("checked");
        let result = match read_design(env, &req.design) {
            Ok(d) => session.submit_design(d),
            Err(rejection) => {
                let raw = match &req.design {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                session.submit_unreadable(raw, rejection)
            }
        };
        let out = match result {
            Ok(DesignResult::Observed(observation)) => {
                let State::Running { session, units } = &self.state else { unreachable!() };
                let design = session.steps().last().expect("just observed").design.clone();
                let payload = ExperimentResult { design, observation, units: units.clone(), next: self.next() };
                self.with_prompt(msg(MessageType::ExperimentResult, &self.id, self.step(), payload))
            }
            Ok(DesignResult::Rejected(r)) => {
                let session = self.running().expect("running");
                let Pending::Experiment { attempt, .. } = *session.pending() else { unreachable!() };
                let left = session.agent().max_rejections() - attempt;
                vec![self.invalid(r, attempt, left)]
            }
            Ok(DesignResult::Exhausted(r)) => {
                let max = self.running().expect("running").agent().max_rejections();
                let reply = self.invalid(r, max, 0);
                self.with_prompt(reply)
            }
            Err(e) => vec![self.error("out_of_turn", e.to_string(), None)],
        };
        if let Some(t) = req.retry_token {
            self.replies.insert(t, out.clone());
        }
        out
    }

    fn invalid(&self, r: Rejection, rejections: u32, retries_left: u32) -> WireMessage {
        let payload = InvalidDesign { code: r.code, reason: r.reason, rejections, retries_left, next: self.next() };
        msg(MessageType::InvalidDesign, &self.id, self.step(), payload)
    }

    fn predictions(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        let Some(session) = self.running() else {
            return vec![self.error("out_of_turn", "send hello first", None)];
        };
        let role = match session.pending() {
            Pending::Predictions { .. } => Role::Scientist,
            Pending::NovicePredictions { .. } => Role::Novice,
            _ => return vec![self.error("out_of_turn", format!("expected {:?}", self.next()).to_lowercase(), None)],
        };
        let batch: PredictionBatch = match m.payload_as() {
            Ok(b) => b,
            Err(e) => {
                let raw = m.payload.to_string();
                self.running().expect("running").submit_unreadable_predictions(raw, e.clone()).ok();
                return vec![self.error("bad_predictions", e, None)];
            }
        };
        let accepted = batch.predictions.len();
        let result = match role {
            Role::Scientist => session.submit_predictions(batch.predictions).map(|_| ()),
            Role::Novice => session.submit_novice_predictions(batch.predictions).map(|_| ()),
        };
        match result {
            Ok(()) => {
                let payload = PredictionReceipt { role, accepted, next: self.next() };
                self.with_prompt(msg(MessageType::PredictionBatch, &self.id, self.step(), payload))
            }
            Err(HarnessError::BadPredictions(reason)) => vec![self.error("bad_predictions", reason, None)],
            Err(e) => vec![self.error("out_of_turn", e.to_string(), None)],
        }
    }

    fn explanation(&mut self, m: &WireMessage) -> Vec<WireMessage> {
        let Some(session) = self.running() else {
            return vec![self.error("out_of_turn", "send hello first", None)];
        };
        if !matches!(session.pending(), Pending::Explanation { .. }) {
            return vec![self.error("out_of_turn", format!("expected {:?}", self.next()).to_lowercase(), None)];
        }
        let text: ExplanationText = match m.payload_as() {
            Ok(t) => t,
            Err(e) => return vec![self.error("bad_payload", e, None)],
        };
        let session = self.running().expect("running");
        let receipt = match session.submit_explanation(text.text) {
            Ok(r) => ExplanationReceipt {
                submitted_chars: r.submitted_chars,
                delivered_chars: r.text.chars().count(),
                truncated: r.truncated,
                next: Next::Done,
            },
            Err(e) => return vec![self.error("out_of_turn", e.to_string(), None)],
        };
        let receipt = ExplanationReceipt { next: self.next(), ..receipt };
        self.with_prompt(msg(MessageType::Explanation, &self.id, self.step(), receipt))
    }

    /// The prompt for the current state, if the session waits on a non-design answer.
    pub fn prompt(&self) -> Option<WireMessage> {
        let State::Running { session, .. } = &self.state else { return None };
        let framing = session.config().framing;
        let step = self.step();
        match session.pending() {
            Pending::Predictions { checkpoint, queries } => {
                let payload = QueryBatch {
                    role: Role::Scientist,
                    checkpoint: Some(*checkpoint),
                    prompt: session.goal().prompt(framing),
                    arity: session.goal().arity,
                    queries: queries.clone(),
                    brief: None,
                    next: Next::Predictions,
                };
                Some(msg(MessageType::QueryBatch, &self.id, step, payload))
            }
            Pending::NovicePredictions { queries } => {
                let payload = QueryBatch {
                    role: Role::Novice,
                    checkpoint: None,
                    prompt: session.goal().prompt(framing),
                    arity: session.goal().arity,
                    queries: queries.clone(),
                    brief: session.novice_brief(),
                    next: Next::NovicePredictions,
                };
                Some(msg(MessageType::QueryBatch, &self.id, step, payload))
            }
            Pending::Explanation { budget } => {
                let payload = ExplainRequest { budget: *budget, next: Next::Explanation };
                Some(msg(MessageType::ExplainRequest, &self.id, step, payload))
            }
            Pending::Experiment { .. } | Pending::Done => None,
        }
    }

    fn with_prompt(&mut self, reply: WireMessage) -> Vec<WireMessage> {
        let mut out = vec![reply];
        match self.next() {
            Next::Done => out.push(self.finish()),
            Next::Experiment | Next::Hello => {}
            _ => out.extend(self.prompt()),
        }
        out
    }

    /// Ends an unfinished episode as aborted; returns `trial_done`, or
    /// `None` when the session never started or is already closed.
    pub fn close(&mut self, reason: &str) -> Option<WireMessage> {
        let session = self.running()?;
        session.abort(reason);
        Some(self.finish())
    }

    /// Ends the episode as timed out.
    pub fn time_out(&mut self) -> Option<WireMessage> {
        self.running()?.time_out();
        Some(self.finish())
    }

    fn finish(&mut self) -> WireMessage {
        let State::Running { session, .. } = std::mem::replace(&mut self.state, State::AwaitHello) else {
            unreachable!("finish is only reached while running")
        };
        let mut record = session.finish();
        record.trial_mut().runtime =
            Some(Runtime { transport: self.transport, wall_clock_ms: self.started.elapsed().as_millis() as u64 });
        let done = trial_done(&record);
        self.state = State::Finished(Box::new(record));
        msg(MessageType::TrialDone, &self.id, self.step(), done)
    }
}

pub fn trial_done(record: &RunRecord) -> TrialDone {
    let t = record.trial();
    let (status, reason) = match &t.status {
        TrialStatus::Complete => ("complete", None),
        TrialStatus::RetryExhausted { .. } => ("retry_exhausted", None),
        TrialStatus::TimedOut { .. } => ("timed_out", None),
        TrialStatus::Aborted { reason } => ("aborted", Some(reason.clone())),
    };
    TrialDone {
        env: t.goal.env,
        goal: t.goal.goal.to_string(),
        status: status.into(),
        reason,
        experiments: t.steps.len(),
        checkpoints: t
            .checkpoints
            .iter()
            .map(|c| CheckpointSummary { step: c.step, standardized_error: c.standardized_error })
            .collect(),
        novice_error: match record {
            RunRecord::Discovery(d) => d.discovery_error(),
            RunRecord::Trial(_) => None,
        },
        next: Next::Done,
    }
}

/// Reads a design given as a tagged object, an untagged object or `key=value` text.
pub fn read_design(env: EnvId, v: &serde_json::Value) -> Result<Design, Rejection> {
    match v {
        serde_json::Value::String(s) => Design::parse_kv(env, s),
        serde_json::Value::Object(o) => {
            let mut o = o.clone();
            o.entry("env").or_insert_with(|| serde_json::Value::String(env.to_string()));
            serde_path_to_error::deserialize(serde_json::Value::Object(o)).map_err(|e| {
                let path = e.path().to_string();
                Rejection::new("parse_error", format!("{path}: {}", e.inner()))
            })
        }
        other => Err(Rejection::new("parse_error", format!("expected a design object or key=value text, got {other}"))),
    }
}
