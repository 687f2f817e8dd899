//! LLM backends: a scripted backend for offline runs and an HTTP JSON backend.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use super::{approx_tokens, Message, ToolCall};

pub const URL_ENV: &str = "JOINTSMITH_BACKEND_URL";
pub const KEY_ENV: &str = "JOINTSMITH_API_KEY";
pub const MODEL_ENV: &str = "JOINTSMITH_MODEL";
const HTTP_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub output_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, o: Self) {
        self.prompt_tokens += o.prompt_tokens;
        self.output_tokens += o.output_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendRequest {
    pub system: String,
    pub messages: Vec<Message>,
    pub tools: Vec<Json>,
}

impl BackendRequest {
    pub fn approx_tokens(&self) -> u64 {
        let body: usize = self.messages.iter().map(|m| approx_tokens(&m.content)).sum();
        (approx_tokens(&self.system) + body) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub call: Option<ToolCall>,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct BackendError {
    pub code: String,
    pub message: String,
}

impl BackendError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

pub trait AgentBackend: Send {
    fn provider(&self) -> &str;
    fn model(&self) -> &str;
    /// Next assistant step: one tool call, or a final message without one.
    fn step(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;
    /// Summary of older history for compaction. `None` selects the
    /// harness's extractive fallback.
    fn summarize(&mut self, _messages: &[Message]) -> Result<Option<String>, BackendError> {
        Ok(None)
    }
}

/// One scripted assistant step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    #[serde(default, skip_serializing_if = "Json::is_null")]
    pub args: Json,
    /// Overrides the estimated usage for this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    /// Makes this step fail as a transport error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScriptStep {
    pub fn tool(name: &str, args: Json) -> Self {
        Self {
            tool: Some(name.to_string()),
            args,
            ..Self::default()
        }
    }

    pub fn finish(text: &str) -> Self {
        Self {
            text: text.to_string(),
            ..Self::default()
        }
    }

    pub fn with_usage(mut self, prompt_tokens: u64, output_tokens: u64) -> Self {
        self.usage = Some(Usage {
            prompt_tokens,
            output_tokens,
        });
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_provider")]
    pub provider: String,
    #[serde(default = "default_model")]
    pub model: String,
    pub steps: Vec<ScriptStep>,
}

fn default_provider() -> String {
    "scripted".to_string()
}

fn default_model() -> String {
    "script".to_string()
}

/// Replays a fixed list of steps. Running past the end is a backend error.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: Script,
    next: usize,
}

impl ScriptedBackend {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        Self::from_script(Script {
            provider: default_provider(),
            model: default_model(),
            steps,
        })
    }

    pub fn from_script(script: Script) -> Self {
        Self { script, next: 0 }
    }

    /// Accepts `{provider, model, steps}` or a bare list of steps.
    pub fn parse(text: &str) -> Result<Self, BackendError> {
        let invalid = |e: serde_json::Error| BackendError::new("invalid_script", e.to_string());
        let v: Json = serde_json::from_str(text).map_err(invalid)?;
        let script = if v.is_array() {
            Script {
                provider: default_provider(),
                model: default_model(),
                steps: serde_json::from_value(v).map_err(invalid)?,
            }
        } else {
            serde_json::from_value(v).map_err(invalid)?
        };
        Ok(Self::from_script(script))
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::new("invalid_script", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn remaining(&self) -> usize {
        self.script.steps.len() - self.next
    }
}

impl AgentBackend for ScriptedBackend {
    fn provider(&self) -> &str {
        &self.script.provider
    }

    fn model(&self) -> &str {
        &self.script.model
    }

    fn step(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let Some(step) = self.script.steps.get(self.next).cloned() else {
            return Err(BackendError::new(
                "script_exhausted",
                format!("script has no step {}", self.next + 1),
            ));
        };
        self.next += 1;
        if let Some(e) = step.error {
            return Err(BackendError::new("injected_failure", e));
        }
        let call = step.tool.map(|name| ToolCall {
            name,
            args: if step.args.is_null() { json!({}) } else { step.args },
        });
        let output = approx_tokens(&step.text)
            + call
                .as_ref()
                .map_or(0, |c| approx_tokens(&c.name) + approx_tokens(&c.args.to_string()));
        let usage = step.usage.unwrap_or(Usage {
            prompt_tokens: request.approx_tokens(),
            output_tokens: output as u64,
        });
        Ok(BackendResponse {
            text: step.text,
            call,
            usage,
        })
    }
}

/// POSTs `{model, system, messages, tools}` and expects
/// `{text, tool_call: {name, arguments} | null, usage: {prompt_tokens, output_tokens}}`.
pub struct HttpBackend {
    url: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

#[derive(Debug, Deserialize)]
struct WireCall {
    name: String,
    #[serde(default)]
    arguments: Json,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    #[serde(default)]
    text: String,
    #[serde(default)]
    tool_call: Option<WireCall>,
    #[serde(default)]
    usage: Usage,
}

pub const SUMMARY_INSTRUCTION: &str = "Summarize the conversation so far for a continuation of the same task. Cover task requirements, constraints, tool findings, the current compile state and the next steps. Reply with the summary only.";

impl HttpBackend {
    pub fn new(url: &str, api_key: Option<String>, model: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(HTTP_TIMEOUT))
            .build()
            .new_agent();
        Self {
            url: url.to_string(),
            api_key,
            model: model.to_string(),
            agent,
        }
    }

    /// Reads the endpoint, key and model name from the environment.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(URL_ENV)
            .map_err(|_| BackendError::new("invalid_config", format!("{URL_ENV} is not set")))?;
        let model = std::env::var(MODEL_ENV).unwrap_or_else(|_| "default".to_string());
        Ok(Self::new(&url, std::env::var(KEY_ENV).ok(), &model))
    }

    fn post(&self, body: &Json) -> Result<WireResponse, BackendError> {
        let mut req = self.agent.post(&self.url);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| BackendError::new("transport_error", e.to_string()))?;
        resp.body_mut()
            .read_json::<WireResponse>()
            .map_err(|e| BackendError::new("invalid_response", e.to_string()))
    }
}

impl AgentBackend for HttpBackend {
    fn provider(&self) -> &str {
        "http"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn step(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let body = json!({
            "model": self.model,
            "system": request.system,
            "messages": request.messages,
            "tools": request.tools,
        });
        let w = self.post(&body)?;
        Ok(BackendResponse {
            text: w.text,
            call: w.tool_call.map(|c| ToolCall {
                name: c.name,
                args: if c.arguments.is_null() { json!({}) } else { c.arguments },
            }),
            usage: w.usage,
        })
    }

    fn summarize(&mut self, messages: &[Message]) -> Result<Option<String>, BackendError> {
        let body = json!({
            "model": self.model,
            "system": SUMMARY_INSTRUCTION,
            "messages": messages,
            "tools": [],
        });
        let w = self.post(&body)?;
        Ok(Some(w.text).filter(|t| !t.trim().is_empty()))
    }
}
