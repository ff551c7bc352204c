#![allow(dead_code)]

use std::path::{Path, PathBuf};

use anyhow::Result;
use discobench::client::Exchange;
use discobench::config::Config;
use discobench::http::{router, AppState};
use discobench::wire::{MessageType, WireMessage};

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn transcripts() -> PathBuf {
    repo().join("docs/transcripts")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(path: &Path) -> Config {
    Config::load(Some(path)).unwrap()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_discobench")
}

/// Serves on an ephemeral port for the rest of the test process.
pub fn start_server(config: Config) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(AppState::new(config))).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn respond(r: Result<ureq::Response, ureq::Error>) -> (u16, String) {
    match r {
        Ok(resp) => (resp.status(), resp.into_string().unwrap()),
        Err(ureq::Error::Status(code, resp)) => (code, resp.into_string().unwrap()),
        Err(e) => panic!("transport error: {e}"),
    }
}

pub fn post(url: &str, body: &str) -> (u16, String) {
    respond(ureq::post(url).set("content-type", "application/x-ndjson").send_string(body))
}

pub fn get(url: &str) -> (u16, String) {
    respond(ureq::get(url).call())
}

pub fn lines(body: &str) -> Vec<WireMessage> {
    body.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Routes each message to its dedicated endpoint.
pub struct HttpExchange {
    pub base: String,
    pub id: Option<String>,
}

impl Exchange for HttpExchange {
    fn send(&mut self, msg: &WireMessage) -> Result<Vec<WireMessage>> {
        let url = match (&self.id, msg.kind) {
            (None, _) => format!("{}/sessions", self.base),
            (Some(id), MessageType::ExperimentRequest) => format!("{}/sessions/{id}/experiment", self.base),
            (Some(id), MessageType::PredictionBatch) => format!("{}/sessions/{id}/predictions", self.base),
            (Some(id), MessageType::Explanation) => format!("{}/sessions/{id}/explanation", self.base),
            (Some(id), _) => format!("{}/sessions/{id}/messages", self.base),
        };
        let (_, body) = post(&url, &msg.to_line());
        let out = lines(&body);
        if self.id.is_none() {
            self.id = Some(out[0].session.clone());
        }
        Ok(out)
    }
}

use discobench::session::SessionSpec;
use discobench::wire::Hello;
use discobench_core::env::GoalSpec;
use discobench_core::harness::{baseline_agent, drive, Agent, BaselineKind, RunRecord};

pub fn hello_for(env: &str, seed: u64, run: u64, agent: &str) -> Hello {
    Hello { env: Some(env.into()), seed: Some(seed), run: Some(run), agent: Some(agent.into()), ..Hello::default() }
}

/// The baseline agent a hello describes, seeded the way the harness seeds it.
pub fn agent_for(config: &Config, hello: &Hello) -> Box<dyn Agent + Send> {
    let spec = SessionSpec::from_hello(config, hello).unwrap();
    let goal = GoalSpec::new(&spec.config, spec.goal).unwrap();
    let kind: BaselineKind = hello.agent.as_deref().unwrap().parse().unwrap();
    baseline_agent(kind, &spec.config, &goal, spec.plan, config.run.particles, config.trial.prior_samples).unwrap()
}

/// The same episode driven in process, without any transport.
pub fn in_process(config: &Config, hello: &Hello) -> RunRecord {
    let spec = SessionSpec::from_hello(config, hello).unwrap();
    let mut agent = agent_for(config, hello);
    drive(spec.start().unwrap(), agent.as_mut(), None)
}
