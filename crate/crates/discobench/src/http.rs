//! HTTP session service. Bodies are the same newline-delimited messages as
//! on stdio; every response carries the lines the stdio server would write.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use discobench_core::harness::Transport;

use crate::config::Config;
use crate::session::WireSession;
use crate::wire::{ErrorPayload, MessageType, Next, WireMessage};

type Shared = Arc<Mutex<WireSession>>;

#[derive(Clone)]
pub struct AppState {
    config: Arc<Config>,
    sessions: Arc<Mutex<HashMap<String, Shared>>>,
    counter: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState {
            config: Arc::new(config),
            sessions: Arc::default(),
            counter: Arc::default(),
        }
    }

    fn get(&self, id: &str) -> Option<Shared> {
        self.sessions.lock().expect("session table").get(id).cloned()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/messages", post(any_message))
        .route("/sessions/{id}/experiment", post(experiment))
        .route("/sessions/{id}/queries", get(queries))
        .route("/sessions/{id}/predictions", post(predictions))
        .route("/sessions/{id}/explanation", post(explanation))
        .route("/sessions/{id}/record", get(record))
        .with_state(state)
}

pub async fn serve(config: Config, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await
}

fn ndjson(status: StatusCode, lines: Vec<String>) -> Response {
    let mut body = lines.join("\n");
    body.push('\n');
    (status, [(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

fn error(status: StatusCode, session: &str, code: &str, message: String, next: Next) -> Response {
    let payload = ErrorPayload { code: code.into(), message, echo: None, next };
    ndjson(status, vec![WireMessage::new(MessageType::Error, session, 0, payload).to_line()])
}

fn unknown(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, id, "unknown_session", format!("no session `{id}`"), Next::Hello)
}

fn status_of(lines: &[String]) -> StatusCode {
    let first: Option<WireMessage> = lines.first().and_then(|l| serde_json::from_str(l).ok());
    match first {
        Some(m) if m.kind == MessageType::Error => match m.payload["code"].as_str() {
            Some("malformed" | "version_mismatch" | "bad_payload" | "wrong_endpoint") => StatusCode::BAD_REQUEST,
            _ => StatusCode::CONFLICT,
        },
        _ => StatusCode::OK,
    }
}

async fn process(session: Shared, body: String, expect: Option<MessageType>) -> Response {
    let lines = tokio::task::spawn_blocking(move || {
        let mut s = session.lock().expect("session");
        if let Some(want) = expect {
            let kind = serde_json::from_str::<serde_json::Value>(&body)
                .ok()
                .and_then(|v| serde_json::from_value::<MessageType>(v["type"].clone()).ok());
            if kind.is_some_and(|k| k != want) {
                let want = serde_json::to_value(want).expect("serializes");
                let payload = ErrorPayload {
                    code: "wrong_endpoint".into(),
                    message: format!("this endpoint takes {want} messages"),
                    echo: None,
                    next: Next::Done,
                };
                return vec![WireMessage::new(MessageType::Error, s.id(), 0, payload).to_line()];
            }
        }
        s.handle_line(body.trim())
    })
    .await
    .expect("session task");
    ndjson(status_of(&lines), lines)
}

async fn create(State(state): State<AppState>, body: String) -> Response {
    let n = state.counter.fetch_add(1, Ordering::SeqCst) + 1;
    let id = format!("session-{n}");
    let session = Arc::new(Mutex::new(WireSession::new(&id, (*state.config).clone(), Transport::Http)));
    let response = process(session.clone(), body, Some(MessageType::Hello)).await;
    if response.status() == StatusCode::OK {
        state.sessions.lock().expect("session table").insert(id, session);
    }
    response
}

async fn routed(state: AppState, id: String, body: String, expect: Option<MessageType>) -> Response {
    match state.get(&id) {
        Some(s) => process(s, body, expect).await,
        None => unknown(&id),
    }
}

async fn any_message(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    routed(state, id, body, None).await
}

async fn experiment(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    routed(state, id, body, Some(MessageType::ExperimentRequest)).await
}

async fn predictions(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    routed(state, id, body, Some(MessageType::PredictionBatch)).await
}

async fn explanation(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    routed(state, id, body, Some(MessageType::Explanation)).await
}

/// The open query batch or explanation request, if any.
async fn queries(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(s) = state.get(&id) else { return unknown(&id) };
    let s = s.lock().expect("session");
    match s.prompt() {
        Some(m) => ndjson(StatusCode::OK, vec![m.to_line()]),
        None => error(StatusCode::CONFLICT, &id, "no_queries", "no query batch is open".into(), s.next()),
    }
}

async fn record(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(s) = state.get(&id) else { return unknown(&id) };
    let s = s.lock().expect("session");
    match s.record() {
        Some(r) => {
            let body = serde_json::to_string_pretty(r).expect("records serialize");
            (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], body).into_response()
        }
        None => error(StatusCode::CONFLICT, &id, "not_finished", "the episode is still running".into(), s.next()),
    }
}
