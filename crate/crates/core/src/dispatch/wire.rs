//! Robot command protocol over HTTP.
//!
//! * `GET {endpoint}/state` answers `{"status":…,"load":…,"detail":…}`.
//! * `POST {endpoint}/command` takes `{"dispatch_id":…,"command_id":…,"params":{…}}`
//!   and answers `{"status":"accepted"}` or `{"status":"rejected","detail":…}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::registry::StateReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRequest {
    pub dispatch_id: String,
    pub command_id: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandReply {
    pub status: AckStatus,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CommandReply {
    pub fn accepted() -> Self {
        Self {
            status: AckStatus::Accepted,
            detail: String::new(),
        }
    }

    pub fn rejected(detail: impl Into<String>) -> Self {
        Self {
            status: AckStatus::Rejected,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ack {
    Accepted,
    Rejected(String),
}

fn url(endpoint: &str, path: &str) -> String {
    format!("{}{path}", endpoint.trim_end_matches('/'))
}

/// Blocking client with one timeout for connect, read and write.
#[derive(Debug, Clone)]
pub struct WireClient {
    agent: ureq::Agent,
}

impl WireClient {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn fetch_state(&self, endpoint: &str) -> Result<StateReport, String> {
        let resp = self.agent.get(&url(endpoint, "/state")).call().map_err(|e| e.to_string())?;
        resp.into_json::<StateReport>().map_err(|e| format!("bad state reply: {e}"))
    }

    /// Any failure to obtain an explicit acceptance counts as a rejection.
    pub fn send_command(&self, endpoint: &str, request: &CommandRequest) -> Ack {
        let body = serde_json::to_value(request).expect("request serializes");
        let resp = match self.agent.post(&url(endpoint, "/command")).send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let detail = r
                    .into_json::<CommandReply>()
                    .map(|c| c.detail)
                    .unwrap_or_default();
                return Ack::Rejected(format!("http {code} {detail}").trim_end().to_string());
            }
            Err(e) => return Ack::Rejected(format!("network error: {e}")),
        };
        match resp.into_json::<CommandReply>() {
            Ok(CommandReply {
                status: AckStatus::Accepted,
                ..
            }) => Ack::Accepted,
            Ok(CommandReply { detail, .. }) => Ack::Rejected(if detail.is_empty() { "rejected".into() } else { detail }),
            Err(e) => Ack::Rejected(format!("bad command reply: {e}")),
        }
    }
}
