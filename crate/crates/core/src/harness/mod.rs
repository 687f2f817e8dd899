//! Agent harness: a one-file workspace, a closed tool set, the session loop,
//! context compaction, example retrieval and trace logging.

pub mod backend;
pub mod compaction;
pub mod examples;
pub mod patch;
pub mod prompts;
pub mod session;
pub mod tools;
pub mod trace;
pub mod workspace;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

pub use backend::{
    AgentBackend, BackendError, BackendRequest, BackendResponse, HttpBackend, ScriptStep, ScriptedBackend, Usage,
};
pub use compaction::{compact_history, CompactionPolicy, CompactionTrigger};
pub use examples::{ExampleEntry, ExampleHit, ExampleIndex};
pub use session::{open_workspace, run_session, SessionConfig, SessionOutcome, SessionState, SessionStatus};
pub use tools::dispatch_tool;
pub use trace::{aggregate_stats, append_trace, read_traces, render_stats_table, replay_program, write_traces, BackendStats, TraceRecord};
pub use workspace::{Workspace, MODEL_PATH};

pub const TOOL_NAMES: [&str; 7] = [
    "read_file",
    "apply_patch",
    "replace",
    "write_file",
    "find_examples",
    "compile_model",
    "probe_model",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct HarnessError {
    pub code: &'static str,
    pub message: String,
}

impl HarnessError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub args: Json,
}

impl ToolCall {
    pub fn new(name: &str, args: Json) -> Self {
        Self {
            name: name.to_string(),
            args,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub ok: bool,
    pub content: String,
    /// Error code when `ok` is false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ToolResult {
    pub fn ok(content: impl Into<String>) -> Self {
        Self {
            ok: true,
            content: content.into(),
            error: None,
        }
    }

    pub fn err(e: HarnessError) -> Self {
        Self {
            ok: false,
            content: e.to_string(),
            error: Some(e.code.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// One history entry: a completed turn or a compaction summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnRecord {
    Turn {
        turn: usize,
        assistant: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        call: Option<ToolCall>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        result: Option<ToolResult>,
        usage: Usage,
    },
    Summary {
        text: String,
        replaced: usize,
    },
}

impl TurnRecord {
    /// Messages this record contributes to the backend conversation.
    pub fn messages(&self) -> Vec<Message> {
        match self {
            TurnRecord::Turn {
                assistant, call, result, ..
            } => {
                let mut text = assistant.clone();
                if let Some(c) = call {
                    if !text.is_empty() {
                        text.push('\n');
                    }
                    text.push_str(&format!(
                        "<tool_call name=\"{}\">{}</tool_call>",
                        c.name,
                        serde_json::to_string(&c.args).expect("json value serializes")
                    ));
                }
                let mut out = vec![Message::new(Role::Assistant, text)];
                if let Some(r) = result {
                    out.push(Message::new(Role::Tool, r.content.clone()));
                }
                out
            }
            TurnRecord::Summary { text, .. } => vec![Message::new(Role::User, text.clone())],
        }
    }

    /// Approximate token count at four characters per token.
    pub fn approx_tokens(&self) -> usize {
        self.messages().iter().map(|m| approx_tokens(&m.content)).sum()
    }
}

pub fn approx_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}
