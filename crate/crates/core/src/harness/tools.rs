//! Dispatch of the closed tool set against the workspace.

use serde_json::{json, Value as Json};

use crate::validation::{render_compile_signals, run_probe, LoopState, ProbeOptions};

use super::patch::{apply_patch, replace_exact};
use super::session::{CompileSnapshot, SessionState};
use super::workspace::{Workspace, MODEL_PATH};
use super::{HarnessError, ToolCall, ToolResult, TOOL_NAMES};

const DEFAULT_EXAMPLES: usize = 3;

/// Tool specifications sent to backends.
pub fn tool_specs() -> Vec<Json> {
    let s = |name: &str, description: &str, props: Json, required: &[&str]| {
        json!({
            "name": name,
            "description": description,
            "parameters": {"type": "object", "properties": props, "required": required},
        })
    };
    let string = json!({"type": "string"});
    vec![
        s("read_file", "Read exact text of model.apl or a docs/ path.", json!({"path": string}), &["path"]),
        s(
            "apply_patch",
            "Apply @@ context hunks to model.apl. Body lines start with ' ', '-' or '+'.",
            json!({"patch": string}),
            &["patch"],
        ),
        s(
            "replace",
            "Replace literal text in model.apl; fails unless it occurs expected_count times.",
            json!({"old": string, "new": string, "expected_count": {"type": "integer"}}),
            &["old", "new"],
        ),
        s(
            "write_file",
            "Overwrite model.apl with new content.",
            json!({"path": string, "content": string}),
            &["content"],
        ),
        s(
            "find_examples",
            "Search curated examples for reusable construction patterns.",
            json!({"query": string, "k": {"type": "integer"}}),
            &["query"],
        ),
        s("compile_model", "Compile, run QC and tests, and return <compile_signals>.", json!({}), &[]),
        s(
            "probe_model",
            "Evaluate one read-only inspection expression against the last compiled asset.",
            json!({"query": string}),
            &["query"],
        ),
    ]
}

fn arg_str<'a>(call: &'a ToolCall, key: &str) -> Result<&'a str, HarnessError> {
    call.args.get(key).and_then(Json::as_str).ok_or_else(|| {
        HarnessError::new(
            "invalid_arguments",
            format!("{} requires a string argument '{key}'", call.name),
        )
    })
}

fn arg_count(call: &ToolCall, key: &str, default: usize) -> Result<usize, HarnessError> {
    match call.args.get(key) {
        None | Some(Json::Null) => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| {
            HarnessError::new(
                "invalid_arguments",
                format!("{} argument '{key}' must be a non-negative integer", call.name),
            )
        }),
    }
}

/// Executes one tool call. Errors come back as failed results; the model
/// file changes only when an edit succeeds.
pub fn dispatch_tool(ws: &mut Workspace, state: &mut SessionState, call: &ToolCall) -> ToolResult {
    match run(ws, state, call) {
        Ok(text) => ToolResult::ok(text),
        Err(e) => ToolResult::err(e),
    }
}

fn run(ws: &mut Workspace, state: &mut SessionState, call: &ToolCall) -> Result<String, HarnessError> {
    match call.name.as_str() {
        "read_file" => {
            let path = call.args.get("path").and_then(Json::as_str).unwrap_or(MODEL_PATH);
            Ok(ws.read(path)?.to_string())
        }
        "apply_patch" => {
            // freeform patches arrive as a bare string
            let patch = match &call.args {
                Json::String(s) => s.as_str(),
                _ => arg_str(call, "patch")?,
            };
            let next = apply_patch(ws.model(), patch)?;
            ws.set_model(next);
            Ok(format!("Patched {MODEL_PATH}."))
        }
        "replace" => {
            if let Some(p) = call.args.get("path").and_then(Json::as_str) {
                Workspace::check_writable(p)?;
            }
            let (old, new) = (arg_str(call, "old")?, arg_str(call, "new")?);
            let expected = arg_count(call, "expected_count", 1)?;
            let next = replace_exact(ws.model(), old, new, expected)?;
            ws.set_model(next);
            Ok(format!("Replaced {expected} occurrence(s) in {MODEL_PATH}."))
        }
        "write_file" => {
            let path = call.args.get("path").and_then(Json::as_str).unwrap_or(MODEL_PATH);
            Workspace::check_writable(path)?;
            let content = arg_str(call, "content")?.to_string();
            let n = content.len();
            ws.set_model(content);
            Ok(format!("Wrote {n} bytes to {MODEL_PATH}."))
        }
        "find_examples" => {
            let query = arg_str(call, "query")?;
            let k = arg_count(call, "k", DEFAULT_EXAMPLES)?;
            let hits = ws.examples.search(query, k)?;
            Ok(ws.examples.render(&hits))
        }
        "compile_model" => {
            let asset = ws.compile();
            let report = &asset.outcome.report;
            let codes = report.failure_codes();
            let failed = !codes.is_empty();
            let repeated = failed
                && state
                    .last_compile
                    .as_ref()
                    .is_some_and(|c| c.failures > 0 && c.failure_codes == codes);
            state.consecutive_failures = if failed { state.consecutive_failures + 1 } else { 0 };
            let loop_state = LoopState {
                consecutive_failures: state.consecutive_failures,
                turn: state.turn,
                repeated_failure_codes: repeated,
            };
            let text = render_compile_signals(report, &loop_state);
            state.last_compile = Some(CompileSnapshot {
                program_sha256: asset.program_sha256.clone(),
                summary: report.summary().to_string(),
                failures: report.summary().failures,
                failure_codes: codes,
            });
            state.last_feedback = Some(text.clone());
            Ok(text)
        }
        "probe_model" => {
            let query = arg_str(call, "query")?;
            let asset = ws.compiled().ok_or_else(|| {
                HarnessError::new("no_compiled_asset", "run compile_model successfully before probing")
            })?;
            let o = &asset.outcome;
            let (Some(obj), Some(tree), Some(meshes)) = (&o.object, &o.tree, &o.meshes) else {
                return Err(HarnessError::new("no_compiled_asset", "the last compile produced no asset"));
            };
            let v = run_probe(obj, tree, meshes, query, &ProbeOptions::default())
                .map_err(|e| HarnessError::new("probe_error", format!("[{}] {}", e.code, e.message)))?;
            let text = serde_json::to_string_pretty(&v).expect("probe output serializes");
            state.last_feedback = Some(text.clone());
            Ok(text)
        }
        other => Err(HarnessError::new(
            "unknown_tool",
            format!("'{other}' is not a tool; available: {}", TOOL_NAMES.join(", ")),
        )),
    }
}
