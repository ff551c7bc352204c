mod common;

use common::*;
use discobench::config::Config;
use discobench::session::WireSession;
use discobench::stdio::run_transcript;
use discobench::wire::*;
use discobench_core::harness::{RunRecord, TrialStatus, Transport};
use serde_json::json;

fn fast() -> Config {
    let mut c = load(&fixture("fast.toml"));
    c.eig.enabled = false;
    c
}

fn line(kind: &str, payload: serde_json::Value) -> String {
    json!({"type": kind, "session": "", "step": 0, "payload": payload, "schema_version": "1"}).to_string()
}

fn session() -> WireSession {
    WireSession::new("t", fast(), Transport::Stdio)
}

fn run(lines: &[String]) -> (Vec<WireMessage>, Option<RunRecord>) {
    let (out, record) = run_transcript(&(lines.join("\n") + "\n"), session());
    (out.lines().map(|l| serde_json::from_str(l).unwrap()).collect(), record)
}

fn hello(env: &str, extra: serde_json::Value) -> String {
    let mut p = json!({"env": env, "seed": "5", "checkpoints": [0, 2], "queries_per_checkpoint": 2});
    p.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    line("hello", p)
}

fn zeros(n: usize) -> String {
    line("prediction_batch", json!({"predictions": vec!["0"; n]}))
}

#[test]
fn hello_describes_the_environment_in_the_chosen_framing() {
    let prior = "you are observing how participants balance delayed vs immediate rewards";
    let scrubbed = "you receive a tuple of three values";
    let (out, _) = run(&[hello("hyperbolic_discounting", json!({"framing": "prior"}))]);
    assert_eq!(out[0].kind, MessageType::EnvDescription);
    let text = out[0].payload["description"]["text"].as_str().unwrap().to_lowercase();
    assert!(text.contains(prior), "{text}");
    assert_eq!(out[1].kind, MessageType::QueryBatch);

    let (out, _) = run(&[hello("hyperbolic_discounting", json!({"framing": "no_prior"}))]);
    let text = out[0].payload["description"]["text"].as_str().unwrap().to_lowercase();
    assert!(text.contains(scrubbed) && !text.contains(prior), "{text}");
    for noun in ["reward", "dollar", "participant"] {
        assert!(!text.contains(noun), "{noun} in {text}");
    }
}

#[test]
fn configured_framing_applies_when_hello_is_silent() {
    let mut config = fast();
    config.run.framing = discobench_core::env::Framing::NoPrior;
    let input = hello("hyperbolic_discounting", json!({})) + "\n";
    let (out, _) = run_transcript(&input, WireSession::new("t", config, Transport::Stdio));
    assert!(out.contains("you receive a tuple of three values"));
}

#[test]
fn immediate_reward_not_below_delayed_is_rejected_with_reason() {
    let (out, _) = run(&[
        hello("hyperbolic_discounting", json!({})),
        zeros(2),
        line("experiment_request", json!({"design": {"ir": "100", "dr": "100", "delay": "10"}})),
        line("experiment_request", json!({"design": "ir=120 dr=100 d=10"})),
    ]);
    let invalid: Vec<&WireMessage> = out.iter().filter(|m| m.kind == MessageType::InvalidDesign).collect();
    assert_eq!(invalid.len(), 2);
    for m in invalid {
        assert_eq!(m.payload["reason"], "iR must be strictly less than dR");
        assert_eq!(m.payload["code"], "order");
        assert_eq!(m.step, 0);
    }
}

#[test]
fn malformed_lines_are_echoed_and_the_session_continues() {
    let (out, record) = run(&[
        hello("death_process", json!({})),
        "{not json".into(),
        line("prediction_batch", json!({"predictions": ["1", "2"]})),
        r#"{"type":"mystery","schema_version":"1"}"#.into(),
    ]);
    let errors: Vec<&WireMessage> = out.iter().filter(|m| m.kind == MessageType::Error).collect();
    assert_eq!(errors[0].payload["code"], "malformed");
    assert_eq!(errors[0].payload["echo"], "{not json");
    assert_eq!(errors[0].payload["next"], "predictions");
    assert_eq!(errors[1].payload["echo"], r#"{"type":"mystery","schema_version":"1"}"#);
    assert!(out.iter().any(|m| m.kind == MessageType::PredictionBatch));
    assert_eq!(record.unwrap().trial().checkpoints.len(), 1);
}

#[test]
fn unknown_fields_are_ignored() {
    let mut h: serde_json::Value = serde_json::from_str(&hello("dugongs", json!({"future_option": true}))).unwrap();
    h["extra_envelope_field"] = json!(1);
    let (out, _) = run(&[h.to_string()]);
    assert_eq!(out[0].kind, MessageType::EnvDescription);
}

#[test]
fn three_invalid_designs_end_the_trial() {
    let bad = line("experiment_request", json!({"design": {"time": "-3"}}));
    let (out, record) = run(&[hello("death_process", json!({})), zeros(2), bad.clone(), bad.clone(), bad.clone(), bad]);
    let invalid: Vec<&WireMessage> = out.iter().filter(|m| m.kind == MessageType::InvalidDesign).collect();
    let left: Vec<u64> = invalid.iter().map(|m| m.payload["retries_left"].as_u64().unwrap()).collect();
    assert_eq!(left, [2, 1, 0]);
    assert_eq!(invalid[2].payload["next"], "done");
    let done = out.iter().find(|m| m.kind == MessageType::TrialDone).unwrap();
    assert_eq!(done.payload["status"], "retry_exhausted");
    assert_eq!(out.last().unwrap().kind, MessageType::TrialDone);
    let record = record.unwrap();
    assert!(matches!(&record.trial().status, TrialStatus::RetryExhausted { step: 0, rejected } if rejected.len() == 3));
    assert!(record.trial().steps.is_empty());
}

#[test]
fn retry_limit_from_hello() {
    let bad = line("experiment_request", json!({"design": {"age": "99"}}));
    let (out, _) = run(&[hello("dugongs", json!({"retry_limit": 0})), zeros(2), bad]);
    let done = out.iter().find(|m| m.kind == MessageType::TrialDone).unwrap();
    assert_eq!(done.payload["status"], "retry_exhausted");
}

#[test]
fn rejected_designs_do_not_use_up_steps() {
    let (out, record) = run(&[
        hello("death_process", json!({})),
        zeros(2),
        line("experiment_request", json!({"design": {"time": "12"}})),
        line("experiment_request", json!({"design": {"time": "1"}})),
        line("experiment_request", json!({"design": "t=11"})),
        line("experiment_request", json!({"design": "time=2"})),
        zeros(2),
    ]);
    let record = record.unwrap();
    assert!(record.is_complete(), "{:?}", out.last());
    let steps = &record.trial().steps;
    assert_eq!(steps.len(), 2);
    assert_eq!(steps[0].rejected.len(), 1);
    assert_eq!(steps[1].rejected.len(), 1);
}

#[test]
fn designs_may_omit_the_env_tag_or_use_text() {
    let (out, record) = run(&[
        hello("location_finding", json!({})),
        line("prediction_batch", json!({"predictions": ["1", "1"]})),
        line("experiment_request", json!({"design": {"point": ["0.5", "0.25"]}})),
        line("experiment_request", json!({"design": "x0=1 x1=0.2"})),
        line("prediction_batch", json!({"predictions": ["1", "1"]})),
    ]);
    assert!(record.unwrap().is_complete(), "{out:?}");
}

#[test]
fn wrong_sized_predictions_keep_the_batch_open() {
    let (out, record) = run(&[
        hello("death_process", json!({})),
        zeros(3),
        line("prediction_batch", json!({"predictions": ["a", "b"]})),
        zeros(2),
    ]);
    let codes: Vec<&str> =
        out.iter().filter(|m| m.kind == MessageType::Error).map(|m| m.payload["code"].as_str().unwrap()).collect();
    assert_eq!(codes, ["bad_predictions", "bad_predictions"]);
    let record = record.unwrap();
    assert_eq!(record.trial().checkpoints.len(), 1);
    let calls = serde_json::to_value(&record.trial().call_log).unwrap();
    let kinds: Vec<&str> = calls.as_array().unwrap().iter().map(|c| c["call"].as_str().unwrap()).collect();
    assert_eq!(&kinds[..3], ["rejected_predictions", "unreadable_predictions", "predictions"]);
}

#[test]
fn out_of_turn_messages_are_refused() {
    let (out, _) = run(&[
        line("experiment_request", json!({"design": "t=1"})),
        hello("death_process", json!({})),
        line("experiment_request", json!({"design": "t=1"})),
        hello("death_process", json!({})),
    ]);
    let codes: Vec<&str> =
        out.iter().filter(|m| m.kind == MessageType::Error).map(|m| m.payload["code"].as_str().unwrap()).collect();
    assert_eq!(codes, ["out_of_turn", "out_of_turn", "out_of_turn"]);
    assert_eq!(out[0].payload["next"], "hello");
}

#[test]
fn version_mismatch_is_reported() {
    let mut h: serde_json::Value = serde_json::from_str(&hello("death_process", json!({}))).unwrap();
    h["schema_version"] = json!("0.9");
    let (out, record) = run(&[h.to_string()]);
    assert_eq!(out[0].payload["code"], "version_mismatch");
    assert!(record.is_none());
}

#[test]
fn bad_hello_names_the_problem() {
    let (out, _) = run(&[hello("unicorns", json!({})), hello("death_process", json!({"checkpoints": [2, 1]}))]);
    assert_eq!(out[0].payload["code"], "bad_hello");
    assert!(out[0].payload["message"].as_str().unwrap().contains("unicorns"));
    assert!(out[1].payload["message"].as_str().unwrap().contains("increasing"));
}

#[test]
fn end_of_input_aborts_with_a_summary_line() {
    let (out, record) = run(&[hello("death_process", json!({})), zeros(2)]);
    let last = out.last().unwrap();
    assert_eq!(last.kind, MessageType::TrialDone);
    assert_eq!(last.payload["status"], "aborted");
    assert!(!record.unwrap().is_complete());
}

#[test]
fn retry_token_replays_the_stored_reply() {
    let req = line("experiment_request", json!({"design": "t=1", "retry_token": "x"}));
    let (out, record) = run(&[hello("death_process", json!({})), zeros(2), req.clone(), req]);
    let results: Vec<&WireMessage> = out.iter().filter(|m| m.kind == MessageType::ExperimentResult).collect();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0], results[1]);
    assert_eq!(record.unwrap().trial().steps.len(), 1);
}

#[test]
fn discovery_over_the_wire() {
    let (out, record) = run(&[
        hello("dugongs", json!({"mode": "discovery", "explanation_budget": 5})),
        zeros(2),
        line("experiment_request", json!({"design": "age=1"})),
        line("experiment_request", json!({"design": "age=3"})),
        zeros(2),
        line("explanation", json!({"text": "alpha=2.5 and more"})),
        line("prediction_batch", json!({"predictions": ["2.5", "2.5"]})),
    ]);
    let receipt = out.iter().find(|m| m.kind == MessageType::Explanation).unwrap();
    assert_eq!(receipt.payload["truncated"], true);
    assert_eq!(receipt.payload["delivered_chars"], 5);
    let novice = out.iter().find(|m| m.kind == MessageType::QueryBatch && m.payload["role"] == "novice").unwrap();
    let brief = novice.payload["brief"].as_object().unwrap();
    let mut keys: Vec<&str> = brief.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["description", "explanation", "goal", "goal_prompt"]);
    assert_eq!(brief["explanation"], "alpha");
    let done = out.last().unwrap();
    assert_eq!(done.payload["status"], "complete");
    assert!(done.payload["novice_error"].is_string());
    assert!(matches!(record.unwrap(), RunRecord::Discovery(d) if d.is_complete()));
}
