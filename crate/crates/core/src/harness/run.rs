use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;

use super::record::{Call, DiscoveryRecord, RunRecord, TrialRecord};
use super::session::{DesignResult, Mode, Pending, TrialSession};
use super::{Agent, AgentError, HarnessError, Novice, SeedPlan, TrialSettings};
use crate::env::verbalize::{VerbalizeError, VerbalizeRequest, Verbalizer};
use crate::env::{EnvConfig, EnvId, GoalId};

fn fail(session: &mut TrialSession, e: AgentError) {
    match e {
        AgentError::Timeout(_) => session.time_out(),
        other => session.abort(format!("{other}")),
    }
}

/// Answers everything the session asks until it is done.
pub fn drive(mut session: TrialSession, scientist: &mut dyn Agent, mut novice: Option<&mut dyn Novice>) -> RunRecord {
    if let Err(e) = scientist.begin(&session.intro()) {
        fail(&mut session, e);
    }
    let mut novice_started = false;
    loop {
        match session.pending().clone() {
            Pending::Done => break,
            Pending::Experiment { step, rejection, .. } => match scientist.propose(step, rejection.as_ref()) {
                Ok(design) => match session.submit_design(design.clone()) {
                    Ok(DesignResult::Observed(obs)) => scientist.observe(&design, &obs),
                    Ok(_) => {}
                    Err(e) => session.abort(format!("{e}")),
                },
                Err(AgentError::Unreadable { raw, rejection }) => {
                    if let Err(e) = session.submit_unreadable(raw, rejection) {
                        session.abort(format!("{e}"));
                    }
                }
                Err(e) => fail(&mut session, e),
            },
            Pending::Predictions { queries, .. } => match scientist.predict(&queries) {
                Ok(p) => {
                    if let Err(e) = session.submit_predictions(p) {
                        session.abort(format!("{e}"));
                    }
                }
                Err(e) => fail(&mut session, e),
            },
            Pending::Explanation { budget } => match scientist.explain(budget) {
                Ok(text) => {
                    if let Err(e) = session.submit_explanation(text) {
                        session.abort(format!("{e}"));
                    }
                }
                Err(e) => fail(&mut session, e),
            },
            Pending::NovicePredictions { queries } => {
                let Some(n) = novice.as_deref_mut() else {
                    session.abort("no novice attached");
                    continue;
                };
                if !novice_started {
                    novice_started = true;
                    let brief = session.novice_brief().expect("explanation submitted");
                    if let Err(e) = n.begin(&brief) {
                        fail(&mut session, e);
                        continue;
                    }
                }
                match n.predict(&queries) {
                    Ok(p) => {
                        if let Err(e) = session.submit_novice_predictions(p) {
                            session.abort(format!("{e}"));
                        }
                    }
                    Err(e) => fail(&mut session, e),
                }
            }
        }
    }
    session.finish()
}

pub fn run_trial(
    config: EnvConfig,
    goal: GoalId,
    settings: TrialSettings,
    plan: SeedPlan,
    agent: &mut dyn Agent,
) -> Result<TrialRecord, HarnessError> {
    let session = TrialSession::new(config, goal, settings, plan, agent.info(), Mode::Trial)?;
    match drive(session, agent, None) {
        RunRecord::Trial(t) => Ok(t),
        RunRecord::Discovery(_) => unreachable!("trial mode"),
    }
}

/// Runs `settings.steps()` experiments, then hands the explanation to the novice.
pub fn run_discovery(
    config: EnvConfig,
    goal: GoalId,
    settings: TrialSettings,
    plan: SeedPlan,
    scientist: &mut dyn Agent,
    novice: &mut dyn Novice,
) -> Result<DiscoveryRecord, HarnessError> {
    let mode = Mode::Discovery { novice: novice.info() };
    let session = TrialSession::new(config, goal, settings, plan, scientist.info(), mode)?;
    match drive(session, scientist, Some(novice)) {
        RunRecord::Discovery(d) => Ok(d),
        RunRecord::Trial(_) => unreachable!("discovery mode"),
    }
}

/// Hands back recorded texts in order; recorded fallbacks fail again.
struct ReplayVerbalizer {
    texts: Vec<Option<String>>,
    next: Cell<usize>,
}

impl Verbalizer for ReplayVerbalizer {
    fn verbalize(&self, _req: &VerbalizeRequest<'_>) -> Result<String, VerbalizeError> {
        let i = self.next.get();
        self.next.set(i + 1);
        match self.texts.get(i) {
            Some(Some(t)) => Ok(t.clone()),
            _ => Err(VerbalizeError::Unavailable(String::from("recorded fallback"))),
        }
    }
}

/// Re-executes a record from its seed plan and call log. Design scoring
/// is recomputed; the result should equal the input without its runtime.
pub fn replay(record: &RunRecord) -> Result<RunRecord, HarnessError> {
    let trial = record.trial();
    let mode = match record {
        RunRecord::Trial(_) => Mode::Trial,
        RunRecord::Discovery(d) => Mode::Discovery { novice: d.novice_agent.clone() },
    };
    let mut session = TrialSession::new(
        trial.config.clone(),
        trial.goal.goal,
        trial.settings.clone(),
        trial.seed_plan,
        trial.agent.clone(),
        mode,
    )?;
    if matches!(trial.config.id(), EnvId::Emotions | EnvId::MoralMachines) {
        let texts = trial
            .steps
            .iter()
            .map(|s| {
                let fallback = s.observation.flags.iter().any(|f| f == "verbalizer_fallback");
                (!fallback).then(|| s.observation.text.clone())
            })
            .collect();
        session = session
            .with_verbalizer(Box::new(ReplayVerbalizer { texts, next: Cell::new(0) }), trial.verbalizer.clone());
    }
    let novice_log = match record {
        RunRecord::Discovery(d) => d.novice.as_ref().map(|n| n.call_log.clone()).unwrap_or_default(),
        RunRecord::Trial(_) => Vec::new(),
    };
    for entry in trial.call_log.iter().chain(&novice_log) {
        let diverged = |e: HarnessError| HarnessError::Replay(format!("{e}"));
        match &entry.call {
            Call::Design { design, .. } => {
                session.submit_design(design.clone()).map_err(diverged)?;
            }
            Call::UnreadableDesign { raw, rejection, .. } => {
                session.submit_unreadable(raw.clone(), rejection.clone()).map_err(diverged)?;
            }
            Call::Predictions { predictions, .. } => {
                session.submit_predictions(predictions.clone()).map_err(diverged)?;
            }
            Call::RejectedPredictions { predictions, .. } => {
                let res = match session.pending() {
                    Pending::NovicePredictions { .. } => session.submit_novice_predictions(predictions.clone()).map(|_| ()),
                    _ => session.submit_predictions(predictions.clone()).map(|_| ()),
                };
                if res.is_ok() {
                    return Err(HarnessError::Replay(String::from("rejected predictions were accepted on replay")));
                }
            }
            Call::UnreadablePredictions { raw, reason, .. } => {
                session.submit_unreadable_predictions(raw.clone(), reason.clone()).map_err(diverged)?;
            }
            Call::Explanation { text } => {
                session.submit_explanation(text.clone()).map_err(diverged)?;
            }
            Call::NovicePredictions { predictions } => {
                session.submit_novice_predictions(predictions.clone()).map_err(diverged)?;
            }
            Call::Abort { reason } if reason == "timeout" => session.time_out(),
            Call::Abort { reason } => session.abort(reason.clone()),
        }
    }
    Ok(session.finish())
}
