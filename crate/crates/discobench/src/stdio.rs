//! One session over newline-delimited messages.

use std::io::{BufRead, Write};

use discobench_core::harness::RunRecord;

use crate::session::WireSession;

/// Serves until the episode ends or input closes. End of input before the
/// end aborts the episode; the last line written is always `trial_done`
/// once a hello was accepted.
pub fn serve(input: impl BufRead, mut output: impl Write, mut session: WireSession) -> std::io::Result<Option<RunRecord>> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for out in session.handle_line(&line) {
            writeln!(output, "{out}")?;
        }
        output.flush()?;
        if session.is_finished() {
            return Ok(session.into_record());
        }
    }
    if let Some(done) = session.close("client disconnected") {
        writeln!(output, "{}", done.to_line())?;
        output.flush()?;
    }
    Ok(session.into_record())
}

/// Feeds a transcript's input lines and collects the output lines.
pub fn run_transcript(input: &str, session: WireSession) -> (String, Option<RunRecord>) {
    let mut out = Vec::new();
    let record = serve(input.as_bytes(), &mut out, session).expect("in-memory io");
    (String::from_utf8(out).expect("utf-8"), record)
}
