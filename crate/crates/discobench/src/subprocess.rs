//! Agents run as child processes speaking the stdio protocol as clients.
//!
//! The child writes `hello` and its answers to stdout and reads the
//! server's lines on stdin. Each answer must arrive within the timeout.
//! The episode is fixed by the harness; it is exported to the child as
//! `DISCOBENCH_ENV`, `DISCOBENCH_SEED`, `DISCOBENCH_RUN` and `DISCOBENCH_FRAMING`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use discobench_core::harness::{RunRecord, Transport};

use crate::session::{SessionSpec, WireSession};

pub const PREFIX: &str = "cmd:";

pub fn is_command(agent: &str) -> bool {
    agent.starts_with(PREFIX)
}

fn spawn(command: &str, spec: &SessionSpec) -> Result<Child> {
    let (shell, flag) = if cfg!(windows) { ("cmd", "/C") } else { ("sh", "-c") };
    let framing = serde_json::to_value(spec.config.framing)?;
    let mut cmd = Command::new(shell);
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    cmd.arg(flag)
        .arg(command)
        .env("DISCOBENCH_ENV", format!("{}/{}", spec.config.id(), spec.goal))
        .env("DISCOBENCH_SEED", spec.plan.master_seed.to_string())
        .env("DISCOBENCH_RUN", spec.plan.run.to_string())
        .env("DISCOBENCH_FRAMING", framing.as_str().unwrap_or("prior"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .with_context(|| format!("starting agent `{command}`"))
}

/// The agent runs in its own process group so its children go with it.
fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        let group = format!("-{}", child.id());
        let _ = Command::new("kill").args(["-KILL", "--", &group]).stderr(Stdio::null()).status();
    }
    child.kill().ok();
}

/// Runs one episode against `cmd:<command>`.
pub fn run(agent: &str, spec: SessionSpec) -> Result<RunRecord> {
    let command = agent.strip_prefix(PREFIX).ok_or_else(|| anyhow!("not a command agent: {agent}"))?;
    let timeout = Duration::from_millis(spec.settings.timeout_ms);
    let mut child = spawn(command, &spec)?;
    let mut stdin = child.stdin.take().expect("piped");
    let stdout = child.stdout.take().expect("piped");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let mut session = WireSession::pinned("subprocess", spec, Transport::Stdio);
    loop {
        match rx.recv_timeout(timeout) {
            Ok(Ok(line)) if line.trim().is_empty() => continue,
            Ok(Ok(line)) => {
                let out = session.handle_line(&line);
                let gone = out.iter().try_for_each(|l| writeln!(stdin, "{l}")).and_then(|_| stdin.flush()).is_err();
                if session.is_finished() {
                    break;
                }
                if gone {
                    session.close("agent closed its input");
                    break;
                }
            }
            Ok(Err(_)) | Err(mpsc::RecvTimeoutError::Disconnected) => {
                session.close("agent exited");
                break;
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {
                session.time_out();
                break;
            }
        }
    }
    drop(stdin);
    if child.try_wait()?.is_none() {
        std::thread::sleep(Duration::from_millis(50));
        if child.try_wait()?.is_none() {
            kill_tree(&mut child);
        }
    }
    child.wait().ok();
    session.into_record().ok_or_else(|| anyhow!("agent `{command}` never sent a valid hello"))
}
