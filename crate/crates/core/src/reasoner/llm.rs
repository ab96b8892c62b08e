//! Client for an external chat-completions endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    build_decompose_prompt, build_prompt, parse_decomposition_output, parse_reasoner_output, validate_steps,
    Decomposition, IntentResult, Reasoner, ReasonerError, ReasonerInput, RobotContext, FORMAT_REMINDER,
};

pub const API_KEY_ENV: &str = "GESTOS_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub url: String,
    pub model: String,
    /// Passed through untouched when set.
    pub temperature: Option<f64>,
    pub timeout_secs: f64,
    /// Extra attempts after a malformed reply.
    pub max_retries: u32,
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: Some(0.0),
            timeout_secs: 30.0,
            max_retries: 2,
            api_key_env: API_KEY_ENV.into(),
        }
    }
}

pub struct LlmReasoner {
    config: LlmConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl std::fmt::Debug for LlmReasoner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmReasoner")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<set>"))
            .finish()
    }
}

/// First message text of a chat reply: `choices[0].message.content`, or
/// `content[0].text` for endpoints that answer in that shape.
fn reply_text(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.pointer("/content/0/text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl LlmReasoner {
    /// The API key is read from the configured environment variable once, here.
    pub fn new(config: LlmConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build();
        Self { config, agent, api_key }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn chat(&self, messages: &[Value]) -> Result<String, ReasonerError> {
        let mut body = json!({ "model": self.config.model, "messages": messages });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let mut req = self.agent.post(&self.config.url).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send_json(body).map_err(|e| ReasonerError::ReasonerUnavailable(e.to_string()))?;
        let value: Value = resp
            .into_json()
            .map_err(|e| ReasonerError::ReasonerUnavailable(format!("unreadable reply body: {e}")))?;
        reply_text(&value).ok_or_else(|| ReasonerError::MalformedReasonerOutput("reply has no message text".into()))
    }

    /// Sends `prompt`, re-asking with a format reminder while `parse` fails.
    fn ask<T>(&self, prompt: String, parse: impl Fn(&str) -> Result<T, ReasonerError>) -> Result<T, ReasonerError> {
        let mut messages = vec![json!({ "role": "user", "content": prompt })];
        let mut last_err = String::new();
        for attempt in 0..=self.config.max_retries {
            let reply = match self.chat(&messages) {
                Ok(r) => r,
                // A reply without message text is treated like unparseable text.
                Err(ReasonerError::MalformedReasonerOutput(_)) => String::new(),
                Err(e) => return Err(e),
            };
            match parse(&reply) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "malformed reasoner reply");
                    last_err = e.to_string();
                }
            }
            messages.push(json!({ "role": "assistant", "content": reply }));
            messages.push(json!({ "role": "user", "content": FORMAT_REMINDER }));
        }
        Err(ReasonerError::UninterpretableGesture(format!(
            "no valid reply after {} attempts: {last_err}",
            self.config.max_retries + 1
        )))
    }
}

impl Reasoner for LlmReasoner {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn interpret(&self, input: &ReasonerInput) -> Result<IntentResult, ReasonerError> {
        self.ask(build_prompt(input), parse_reasoner_output)
    }

    fn explain_decompose(&self, task: &str, robots: &[RobotContext]) -> Result<Decomposition, ReasonerError> {
        let d = match self.ask(build_decompose_prompt(task, robots), parse_decomposition_output) {
            Ok(d) => d,
            Err(ReasonerError::UninterpretableGesture(e)) => return Err(ReasonerError::NoFeasibleCommand(e)),
            Err(e) => return Err(e),
        };
        let subcommands = validate_steps(d.subcommands, robots);
        if subcommands.is_empty() {
            return Err(ReasonerError::NoFeasibleCommand(task.to_string()));
        }
        Ok(Decomposition {
            subcommands,
            rationale: d.rationale,
        })
    }
}
