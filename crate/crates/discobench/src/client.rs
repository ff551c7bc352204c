//! Plays an [`Agent`] against a wire session through any transport.

use anyhow::{anyhow, bail, Result};
use discobench_core::env::Rejection;
use discobench_core::harness::{Agent, AgentError, Novice, NoviceBrief};

use crate::wire::*;

/// Sends one message and returns the server's lines for it.
pub trait Exchange {
    fn send(&mut self, msg: &WireMessage) -> Result<Vec<WireMessage>>;
}

impl<F: FnMut(&WireMessage) -> Result<Vec<WireMessage>>> Exchange for F {
    fn send(&mut self, msg: &WireMessage) -> Result<Vec<WireMessage>> {
        self(msg)
    }
}

fn out(kind: MessageType, step: usize, payload: impl serde::Serialize) -> WireMessage {
    WireMessage::new(kind, "", step, payload)
}

/// Runs until `trial_done` and returns it.
pub fn play(
    exchange: &mut dyn Exchange,
    hello: &Hello,
    agent: &mut dyn Agent,
    mut novice: Option<&mut dyn Novice>,
) -> Result<TrialDone> {
    let mut pending = vec![out(MessageType::Hello, 0, hello)];
    let mut rejection: Option<Rejection> = None;
    let mut novice_started = false;
    loop {
        let request = pending.pop().ok_or_else(|| anyhow!("client has nothing to send"))?;
        let lines = exchange.send(&request)?;
        let mut next = None;
        for m in &lines {
            match m.kind {
                MessageType::EnvDescription => {
                    let p: EnvDescriptionPayload = m.payload_as().map_err(|e| anyhow!(e))?;
                    agent.begin(&p.intro)?;
                    next = Some((p.next, m.step));
                }
                MessageType::ExperimentResult => {
                    let p: ExperimentResult = m.payload_as().map_err(|e| anyhow!(e))?;
                    agent.observe(&p.design, &p.observation);
                    rejection = None;
                    next = Some((p.next, m.step));
                }
                MessageType::InvalidDesign => {
                    let p: InvalidDesign = m.payload_as().map_err(|e| anyhow!(e))?;
                    rejection = Some(Rejection::new(&p.code, p.reason));
                    next = Some((p.next, m.step));
                }
                MessageType::QueryBatch => {
                    let p: QueryBatch = m.payload_as().map_err(|e| anyhow!(e))?;
                    let predictions = match p.role {
                        Role::Scientist => agent.predict(&p.queries)?,
                        Role::Novice => {
                            let n = novice.as_deref_mut().ok_or_else(|| anyhow!("no novice for a novice batch"))?;
                            if !novice_started {
                                novice_started = true;
                                let brief: NoviceBrief = p.brief.clone().ok_or_else(|| anyhow!("novice batch without brief"))?;
                                n.begin(&brief)?;
                            }
                            n.predict(&p.queries)?
                        }
                    };
                    pending.push(out(MessageType::PredictionBatch, m.step, PredictionBatch { predictions }));
                    next = None;
                }
                MessageType::ExplainRequest => {
                    let p: ExplainRequest = m.payload_as().map_err(|e| anyhow!(e))?;
                    let text = agent.explain(p.budget)?;
                    pending.push(out(MessageType::Explanation, m.step, ExplanationText { text }));
                    next = None;
                }
                MessageType::TrialDone => return m.payload_as().map_err(|e| anyhow!(e)),
                MessageType::Error => {
                    let p: ErrorPayload = m.payload_as().map_err(|e| anyhow!(e))?;
                    bail!("server error {}: {}", p.code, p.message);
                }
                MessageType::PredictionBatch | MessageType::Explanation => {
                    let n: Next = serde_json::from_value(m.payload["next"].clone())?;
                    next = Some((n, m.step));
                }
                other => bail!("unexpected message {other:?}"),
            }
        }
        if let Some((Next::Experiment, step)) = next {
            if pending.is_empty() {
                let design = match agent.propose(step, rejection.as_ref()) {
                    Ok(d) => serde_json::to_value(d)?,
                    Err(AgentError::Unreadable { raw, .. }) => serde_json::Value::String(raw),
                    Err(e) => return Err(e.into()),
                };
                let req = ExperimentRequest { design, retry_token: None };
                pending.push(out(MessageType::ExperimentRequest, step, req));
            }
        }
    }
}

/// Line-oriented exchange: one reply per message, plus a prompt when the
/// reply is not an error and waits on something other than a design.
pub struct StreamExchange<R, W> {
    pub input: R,
    pub output: W,
}

impl<R: std::io::BufRead, W: std::io::Write> StreamExchange<R, W> {
    fn read(&mut self) -> Result<WireMessage> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.input.read_line(&mut line)? == 0 {
                bail!("server closed the stream");
            }
            if !line.trim().is_empty() {
                return Ok(serde_json::from_str(line.trim())?);
            }
        }
    }
}

impl<R: std::io::BufRead, W: std::io::Write> Exchange for StreamExchange<R, W> {
    fn send(&mut self, msg: &WireMessage) -> Result<Vec<WireMessage>> {
        writeln!(self.output, "{}", msg.to_line())?;
        self.output.flush()?;
        let reply = self.read()?;
        let next: Option<Next> = serde_json::from_value(reply.payload["next"].clone()).ok();
        let prompted = reply.kind != MessageType::Error
            && reply.kind != MessageType::TrialDone
            && !matches!(next, Some(Next::Experiment | Next::Hello) | None);
        let mut out = vec![reply];
        if prompted {
            out.push(self.read()?);
        }
        Ok(out)
    }
}
