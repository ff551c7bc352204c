mod common;

use std::io::Write;
use std::process::{Command, Stdio};

use common::*;
use discobench::session::WireSession;
use discobench::stdio::run_transcript;
use discobench_core::harness::Transport;

fn cases() -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(transcripts()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if let Some(stem) = name.strip_suffix(".in.jsonl") {
            let input = std::fs::read_to_string(&path).unwrap();
            let expected = std::fs::read_to_string(transcripts().join(format!("{stem}.out.jsonl"))).unwrap();
            out.push((stem.to_string(), input, expected));
        }
    }
    out.sort();
    assert!(out.len() >= 3, "golden transcripts missing");
    out
}

#[test]
fn golden_transcripts_are_byte_identical_over_stdio() {
    let config = load(&transcripts().join("config.toml"));
    for (name, input, expected) in cases() {
        let (output, _) = run_transcript(&input, WireSession::new("stdio", config.clone(), Transport::Stdio));
        assert_eq!(output, expected, "transcript {name}");
    }
}

#[test]
fn golden_transcript_through_the_binary() {
    let (name, input, expected) = cases().into_iter().find(|c| c.0 == "hyperbolic_prior").unwrap();
    let mut child = Command::new(bin())
        .args(["--config", transcripts().join("config.toml").to_str().unwrap(), "serve-stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{name}");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn golden_transcripts_over_http_return_the_same_lines() {
    let base = start_server(load(&transcripts().join("config.toml")));
    for (name, input, expected) in cases() {
        let mut id: Option<String> = None;
        let mut body = String::new();
        for line in input.lines() {
            let (_, text) = match &id {
                None => post(&format!("{base}/sessions"), line),
                Some(id) => post(&format!("{base}/sessions/{id}/messages"), line),
            };
            if id.is_none() {
                id = Some(lines(&text)[0].session.clone());
            }
            body.push_str(&text);
        }
        let id = id.unwrap();
        let relabelled = body.replace(&format!("\"session\":\"{id}\""), "\"session\":\"stdio\"");
        let stdio_lines: Vec<&str> = expected.lines().collect();
        let http_lines: Vec<&str> = relabelled.lines().collect();
        // stdio closes an unfinished episode at end of input; HTTP keeps it open
        let n = http_lines.len();
        assert_eq!(http_lines, stdio_lines[..n], "transcript {name}");
        if n < stdio_lines.len() {
            assert_eq!(stdio_lines.len(), n + 1);
            assert!(stdio_lines[n].contains("client disconnected"));
        }
    }
}
