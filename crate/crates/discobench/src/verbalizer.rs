//! External verbalizer over HTTP.
//!
//! POSTs `{design, outcome, context, template}` and expects `{"text": ...}`.
//! Any failure is reported to the episode, which falls back to the template
//! and flags the observation.

use std::time::Duration;

use discobench_core::env::verbalize::{template, VerbalizeError, VerbalizeRequest, Verbalizer};
use serde::Deserialize;

pub struct HttpVerbalizer {
    url: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Reply {
    text: String,
}

impl HttpVerbalizer {
    pub fn new(url: &str, timeout_ms: u64) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(timeout_ms)).build();
        HttpVerbalizer { url: url.to_string(), agent }
    }
}

impl Verbalizer for HttpVerbalizer {
    fn verbalize(&self, req: &VerbalizeRequest<'_>) -> Result<String, VerbalizeError> {
        let context: serde_json::Map<String, serde_json::Value> =
            req.context.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.to_string()))).collect();
        let body = serde_json::json!({
            "design": req.design,
            "outcome": req.outcome,
            "context": context,
            "template": template(req),
        });
        let unavailable = |e: String| VerbalizeError::Unavailable(e);
        let reply: Reply = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| unavailable(e.to_string()))?
            .into_json()
            .map_err(|e| unavailable(e.to_string()))?;
        if reply.text.trim().is_empty() {
            return Err(unavailable("empty text".into()));
        }
        Ok(reply.text)
    }
}
