//! A person plays the scientist at a terminal, over the same protocol.

use std::io::{self, BufRead, Write};

use discobench_core::env::{PublicContext, Value};
use discobench_core::harness::RunRecord;

use crate::session::WireSession;
use crate::wire::*;

fn parse_values(line: &str, vector: bool) -> Option<Value> {
    let xs: Result<Vec<f64>, _> =
        line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
    let xs = xs.ok().filter(|v| !v.is_empty())?;
    Some(Value::from_vec(xs, vector))
}

struct Io<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> Io<R, W> {
    fn ask(&mut self, prompt: &str) -> io::Result<Option<String>> {
        write!(self.out, "{prompt}")?;
        self.out.flush()?;
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        let line = line.trim().to_string();
        Ok((line != "quit").then_some(line))
    }
}

fn render(m: &WireMessage, out: &mut impl Write) -> io::Result<()> {
    match m.kind {
        MessageType::EnvDescription => {
            let Ok(p) = m.payload_as::<EnvDescriptionPayload>() else { return Ok(()) };
            let d = &p.intro.description;
            writeln!(out, "{}\n", d.text)?;
            writeln!(out, "Design fields:")?;
            for f in &d.design_fields {
                let range = match (f.low, f.high) {
                    (Some(l), Some(h)) => format!(" in [{l}, {h}]"),
                    _ if !f.choices.is_empty() => format!(" one of {}", f.choices.join(", ")),
                    _ => String::new(),
                };
                let units = if f.units.is_empty() { String::new() } else { format!(" ({})", f.units) };
                writeln!(out, "  {} ({}){range}{units}", f.name, f.kind)?;
            }
            writeln!(out, "Observation: {}", d.observation)?;
            if let PublicContext::Patients(ps) = &p.intro.public {
                writeln!(out, "Patients: {}", serde_json::to_string(ps).unwrap_or_default())?;
            }
            writeln!(out, "\n{}", p.intro.goal_prompt)?;
            writeln!(out, "Type designs as key=value pairs, e.g. `t=1.5`. `quit` ends the session.")?;
        }
        MessageType::ExperimentResult => {
            if let Ok(p) = m.payload_as::<ExperimentResult>() {
                writeln!(out, "observed: {}", p.observation.text)?;
            }
        }
        MessageType::InvalidDesign => {
            if let Ok(p) = m.payload_as::<InvalidDesign>() {
                writeln!(out, "rejected ({}): {}; {} tries left", p.code, p.reason, p.retries_left)?;
            }
        }
        MessageType::QueryBatch => {
            if let Ok(p) = m.payload_as::<QueryBatch>() {
                writeln!(out, "\n{} Answer {} queries, one per line.", p.prompt, p.queries.len())?;
            }
        }
        MessageType::ExplainRequest => {
            if let Ok(p) = m.payload_as::<ExplainRequest>() {
                writeln!(out, "\nExplain what you found in at most {} characters; finish with an empty line.", p.budget)?;
            }
        }
        MessageType::PredictionBatch => writeln!(out, "predictions recorded")?,
        MessageType::Explanation => writeln!(out, "explanation recorded")?,
        MessageType::TrialDone => {
            if let Ok(p) = m.payload_as::<TrialDone>() {
                writeln!(out, "\nepisode {} after {} experiments", p.status, p.experiments)?;
                for c in &p.checkpoints {
                    writeln!(out, "  Error@{} = {:.3}", c.step, c.standardized_error)?;
                }
            }
        }
        MessageType::Error => {
            if let Ok(p) = m.payload_as::<ErrorPayload>() {
                writeln!(out, "error ({}): {}", p.code, p.message)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Runs one episode, returning its record unless the session never started.
pub fn run(mut session: WireSession, hello: &Hello, input: impl BufRead, out: impl Write) -> io::Result<Option<RunRecord>> {
    let mut io = Io { input, out };
    let mut request = WireMessage::new(MessageType::Hello, "", 0, hello);
    let mut batch: Option<QueryBatch> = None;
    loop {
        for m in session.handle(request.clone()) {
            render(&m, &mut io.out)?;
            if m.kind == MessageType::QueryBatch {
                batch = m.payload_as().ok();
            }
        }
        if session.is_finished() {
            return Ok(session.into_record());
        }
        let next = match session.next() {
            Next::Hello => return Ok(None),
            Next::Experiment => io.ask("design> ")?.map(|line| {
                let req = ExperimentRequest { design: serde_json::Value::String(line), retry_token: None };
                WireMessage::new(MessageType::ExperimentRequest, "", 0, req)
            }),
            Next::Predictions | Next::NovicePredictions => {
                let Some(b) = batch.clone() else { return Ok(session.into_record()) };
                let mut predictions = Vec::new();
                let mut quit = false;
                for q in &b.queries {
                    let prompt = format!("{}> ", serde_json::to_string(q).unwrap_or_default());
                    loop {
                        match io.ask(&prompt)? {
                            None => {
                                quit = true;
                                break;
                            }
                            Some(l) => match parse_values(&l, b.arity > 1) {
                                Some(v) if v.as_slice().len() == b.arity => {
                                    predictions.push(v);
                                    break;
                                }
                                _ => writeln!(io.out, "enter {} number(s)", b.arity)?,
                            },
                        }
                    }
                    if quit {
                        break;
                    }
                }
                (!quit).then(|| WireMessage::new(MessageType::PredictionBatch, "", 0, PredictionBatch { predictions }))
            }
            Next::Explanation => {
                let mut text = Vec::new();
                let mut quit = false;
                loop {
                    match io.ask("")? {
                        None => {
                            quit = true;
                            break;
                        }
                        Some(l) if l.is_empty() => break,
                        Some(l) => text.push(l),
                    }
                }
                (!quit).then(|| {
                    WireMessage::new(MessageType::Explanation, "", 0, ExplanationText { text: text.join("\n") })
                })
            }
            Next::Done => return Ok(session.into_record()),
        };
        match next {
            Some(m) => request = m,
            None => {
                if let Some(done) = session.close("operator quit") {
                    render(&done, &mut io.out)?;
                }
                return Ok(session.into_record());
            }
        }
    }
}
