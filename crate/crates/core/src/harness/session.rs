//! The session loop: query the backend, dispatch one tool, record the turn.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::sha256_hex;

use super::backend::{AgentBackend, BackendRequest, Usage};
use super::compaction::{compact_history, CompactionEvent, CompactionPolicy};
use super::prompts::{documentation_packet, task_message, REPROMPT_UNCOMPILED, SYSTEM_PROMPT};
use super::tools::{dispatch_tool, tool_specs};
use super::trace::{CostStats, FeedbackEntry, TraceRecord};
use super::workspace::{Workspace, MODEL_PATH};
use super::{HarnessError, Message, Role, ToolResult, TurnRecord};

pub const BACKENDS: [&str; 2] = ["scripted", "http"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub id: String,
    pub backend: String,
    pub max_turns: usize,
    pub compaction: CompactionPolicy,
    /// Currency units per million tokens.
    pub prompt_price_per_mtok: f64,
    pub output_price_per_mtok: f64,
    /// Receives the exported package, the final program and `trace.json`.
    pub out_dir: Option<PathBuf>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            id: "session".to_string(),
            backend: "scripted".to_string(),
            max_turns: 40,
            compaction: CompactionPolicy::default(),
            prompt_price_per_mtok: 0.0,
            output_price_per_mtok: 0.0,
            out_dir: None,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::new("invalid_config", m));
        if !BACKENDS.contains(&self.backend.as_str()) {
            return bad(format!(
                "unknown backend '{}'; expected one of {}",
                self.backend,
                BACKENDS.join(", ")
            ));
        }
        if self.max_turns == 0 {
            return bad("max_turns must be at least 1".into());
        }
        let c = &self.compaction;
        if c.threshold == 0 || !(0.0..=1.0).contains(&c.hard_fraction) || !(0.0..=1.0).contains(&c.soft_pressure) {
            return bad("compaction threshold must be positive and fractions within [0, 1]".into());
        }
        if self.prompt_price_per_mtok < 0.0 || self.output_price_per_mtok < 0.0 {
            return bad("prices must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileSnapshot {
    pub program_sha256: String,
    pub summary: String,
    pub failures: usize,
    pub failure_codes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub system_prompt: String,
    pub prompt: String,
    /// System prompt, documentation packet and task message.
    pub prefix: Vec<Message>,
    /// Context history; compaction rewrites its middle.
    pub history: Vec<TurnRecord>,
    /// Every completed turn, never compacted.
    pub log: Vec<TurnRecord>,
    pub turn: usize,
    pub initial_program: String,
    pub last_compile: Option<CompileSnapshot>,
    pub last_feedback: Option<String>,
    pub consecutive_failures: usize,
    pub usage: Usage,
    /// Prompt tokens reported for the latest request; 0 when unknown.
    pub last_prompt_tokens: u64,
    pub compactions: Vec<CompactionEvent>,
}

impl SessionState {
    pub fn request(&self) -> BackendRequest {
        let mut messages: Vec<Message> = self.prefix[1..].to_vec();
        messages.extend(self.history.iter().flat_map(TurnRecord::messages));
        BackendRequest {
            system: self.system_prompt.clone(),
            messages,
            tools: tool_specs(),
        }
    }

    /// Whether the latest compile was of `program` and had no failures.
    pub fn clean_compile_of(&self, program: &str) -> bool {
        self.last_compile
            .as_ref()
            .is_some_and(|c| c.failures == 0 && c.program_sha256 == sha256_hex(program.as_bytes()))
    }

    fn push(&mut self, record: TurnRecord) {
        self.history.push(record.clone());
        self.log.push(record);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Success,
    Exhausted,
    BackendError,
}

impl SessionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SessionStatus::Success => "success",
            SessionStatus::Exhausted => "exhausted",
            SessionStatus::BackendError => "backend_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub status: SessionStatus,
    pub final_program: String,
    /// Directory of the exported URDF package for the final program.
    pub final_asset: Option<PathBuf>,
    pub trace: TraceRecord,
    pub error: Option<String>,
}

pub fn open_workspace(
    prompt: &str,
    initial_program: Option<&str>,
    config: &SessionConfig,
) -> Result<(Workspace, SessionState), HarnessError> {
    config.validate()?;
    let mut ws = Workspace::new(initial_program);
    ws.out_dir = config.out_dir.clone();
    let prefix = vec![
        Message::new(Role::System, SYSTEM_PROMPT),
        Message::new(Role::User, documentation_packet(&ws)),
        Message::new(Role::User, task_message(prompt)),
    ];
    let state = SessionState {
        system_prompt: SYSTEM_PROMPT.to_string(),
        prompt: prompt.to_string(),
        prefix,
        history: Vec::new(),
        log: Vec::new(),
        turn: 0,
        initial_program: ws.model().to_string(),
        last_compile: None,
        last_feedback: None,
        consecutive_failures: 0,
        usage: Usage::default(),
        last_prompt_tokens: 0,
        compactions: Vec::new(),
    };
    Ok((ws, state))
}

fn maybe_compact(state: &mut SessionState, config: &SessionConfig, backend: &mut dyn AgentBackend) {
    let tokens = match state.last_prompt_tokens {
        0 => state.request().approx_tokens(),
        n => n,
    };
    let policy = &config.compaction;
    let Some(trigger) = policy.trigger(tokens, state.consecutive_failures, state.history.len()) else {
        return;
    };
    if let Ok((replaced, source)) = compact_history(state, policy, Some(backend)) {
        state.compactions.push(CompactionEvent {
            turn: state.turn,
            trigger,
            prompt_tokens: tokens,
            replaced,
            source,
        });
        // the reported count is stale until the next response
        state.last_prompt_tokens = 0;
    }
}

pub fn run_session(
    ws: &mut Workspace,
    state: &mut SessionState,
    backend: &mut dyn AgentBackend,
    config: &SessionConfig,
) -> SessionOutcome {
    let mut status = SessionStatus::Exhausted;
    let mut error = None;
    while state.turn < config.max_turns {
        maybe_compact(state, config, backend);
        let request = state.request();
        let response = match backend.step(&request) {
            Ok(r) => r,
            Err(e) => {
                status = SessionStatus::BackendError;
                error = Some(e.to_string());
                break;
            }
        };
        state.turn += 1;
        state.usage += response.usage;
        state.last_prompt_tokens = response.usage.prompt_tokens;
        let (call, result, done) = match response.call {
            Some(call) => {
                let result = dispatch_tool(ws, state, &call);
                (Some(call), Some(result), false)
            }
            None if state.clean_compile_of(ws.model()) => (None, None, true),
            None => (
                None,
                Some(ToolResult {
                    ok: false,
                    content: REPROMPT_UNCOMPILED.to_string(),
                    error: Some("termination_refused".to_string()),
                }),
                false,
            ),
        };
        state.push(TurnRecord::Turn {
            turn: state.turn,
            assistant: response.text,
            call,
            result,
            usage: response.usage,
        });
        if done {
            status = SessionStatus::Success;
            break;
        }
    }
    finish(ws, state, backend, config, status, error)
}

fn finish(
    ws: &mut Workspace,
    state: &SessionState,
    backend: &dyn AgentBackend,
    config: &SessionConfig,
    status: SessionStatus,
    error: Option<String>,
) -> SessionOutcome {
    let final_asset = match status {
        SessionStatus::Success => ws.export_dir().map(PathBuf::from),
        _ => None,
    };
    let mut artifacts = Vec::new();
    let mut write_error = None;
    if let Some(out) = &config.out_dir {
        let program = out.join(MODEL_PATH);
        match std::fs::create_dir_all(out).and_then(|_| std::fs::write(&program, ws.model())) {
            Ok(()) => artifacts.push(program.display().to_string()),
            Err(e) => write_error = Some(format!("{}: {e}", program.display())),
        }
        if let Some(dir) = &final_asset {
            artifacts.push(dir.display().to_string());
        }
        artifacts.push(out.join("trace.json").display().to_string());
    }
    let feedback = state
        .log
        .iter()
        .filter_map(|r| match r {
            TurnRecord::Turn {
                turn,
                call: Some(c),
                result: Some(res),
                ..
            } if c.name == "compile_model" || c.name == "probe_model" => Some(FeedbackEntry {
                turn: *turn,
                tool: c.name.clone(),
                text: res.content.clone(),
            }),
            _ => None,
        })
        .collect();
    let mut messages = state.prefix.clone();
    messages.extend(state.log.iter().flat_map(TurnRecord::messages));
    let cost = CostStats::new(
        state.usage,
        config.prompt_price_per_mtok,
        config.output_price_per_mtok,
    );
    let trace = TraceRecord {
        id: config.id.clone(),
        prompt: state.prompt.clone(),
        prompt_sha256: sha256_hex(state.prompt.as_bytes()),
        messages,
        turns: state.log.clone(),
        feedback,
        compactions: state.compactions.clone(),
        initial_program: state.initial_program.clone(),
        final_program: ws.model().to_string(),
        final_program_sha256: ws.model_sha256(),
        provider: backend.provider().to_string(),
        model: backend.model().to_string(),
        status,
        error: error.clone().or(write_error),
        turn_count: state.turn,
        cost,
        artifacts,
        rating: None,
    };
    if let Some(out) = &config.out_dir {
        let json = serde_json::to_string_pretty(&trace).expect("trace serializes") + "\n";
        let _ = std::fs::write(out.join("trace.json"), json);
    }
    SessionOutcome {
        status,
        final_program: ws.model().to_string(),
        final_asset,
        trace,
        error,
    }
}
