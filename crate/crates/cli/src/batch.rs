//! Batch runs: one independent session per prompt across worker threads.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use jointsmith_core::harness::trace::RETENTION_MIN_RATING;
use jointsmith_core::harness::{append_trace, open_workspace, run_session, SessionStatus};

use crate::{make_backend, RunSettings, TRACES_FILE};

pub const BATCH_FILE: &str = "batch.jsonl";
pub const RECORD_FILE: &str = "record.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchStatus {
    Success,
    Exhausted,
    BackendError,
    RejectedByRating,
}

impl BatchStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BatchStatus::Success => "success",
            BatchStatus::Exhausted => "exhausted",
            BatchStatus::BackendError => "backend_error",
            BatchStatus::RejectedByRating => "rejected_by_rating",
        }
    }
}

impl From<SessionStatus> for BatchStatus {
    fn from(s: SessionStatus) -> Self {
        match s {
            SessionStatus::Success => BatchStatus::Success,
            SessionStatus::Exhausted => BatchStatus::Exhausted,
            SessionStatus::BackendError => BatchStatus::BackendError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub id: String,
    pub prompt: String,
    pub status: BatchStatus,
    pub turns: usize,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub total_cost: f64,
    pub artifact_dir: String,
    pub rating: Option<u8>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub id: String,
    pub prompt: String,
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default)]
    pub initial: Option<PathBuf>,
}

/// One prompt per line, or one JSON object `{id, prompt, script?, initial?}`
/// per line. Relative paths resolve against the prompts file.
pub fn read_prompts(path: &Path) -> Result<Vec<PromptSpec>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut specs: Vec<PromptSpec> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut spec = if line.starts_with('{') {
            serde_json::from_str::<PromptSpec>(line).map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))?
        } else {
            PromptSpec {
                id: format!("p{:03}", specs.len()),
                prompt: line.to_string(),
                script: None,
                initial: None,
            }
        };
        for p in [&mut spec.script, &mut spec.initial].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if spec.id.is_empty() || spec.id.contains(['/', '\\']) || spec.id.starts_with('.') {
            return Err(format!("line {}: id '{}' cannot name a directory", i + 1, spec.id));
        }
        if specs.iter().any(|s| s.id == spec.id) {
            return Err(format!("line {}: duplicate id '{}'", i + 1, spec.id));
        }
        specs.push(spec);
    }
    Ok(specs)
}

fn failed_record(spec: &PromptSpec, dir: &Path, error: String) -> BatchRecord {
    BatchRecord {
        id: spec.id.clone(),
        prompt: spec.prompt.clone(),
        status: BatchStatus::BackendError,
        turns: 0,
        prompt_tokens: 0,
        output_tokens: 0,
        total_cost: 0.0,
        artifact_dir: dir.display().to_string(),
        rating: None,
        error: Some(error),
    }
}

fn run_one(
    spec: &PromptSpec,
    out: &Path,
    backend: &str,
    scripts: Option<&Path>,
    settings: &RunSettings,
) -> BatchRecord {
    let dir = out.join(&spec.id);
    if dir.exists() {
        if let Err(e) = std::fs::remove_dir_all(&dir) {
            return failed_record(spec, &dir, format!("cannot clear {}: {e}", dir.display()));
        }
    }
    let script = spec
        .script
        .clone()
        .or_else(|| scripts.map(|d| d.join(format!("{}.json", spec.id))));
    let mut b = match make_backend(backend, script.as_deref()) {
        Ok(b) => b,
        Err(e) => return failed_record(spec, &dir, e),
    };
    let initial = match spec.initial.as_ref().map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => return failed_record(spec, &dir, format!("cannot read initial program: {e}")),
    };
    let cfg = settings.session_config(&spec.id, backend, &dir);
    let (mut ws, mut state) = match open_workspace(&spec.prompt, initial.as_deref(), &cfg) {
        Ok(x) => x,
        Err(e) => return failed_record(spec, &dir, e.to_string()),
    };
    let outcome = run_session(&mut ws, &mut state, b.as_mut(), &cfg);
    let mut error = outcome.error.clone();
    if let Err(e) = append_trace(&out.join(TRACES_FILE), &outcome.trace) {
        error.get_or_insert(e.to_string());
    }
    BatchRecord {
        id: spec.id.clone(),
        prompt: spec.prompt.clone(),
        status: outcome.status.into(),
        turns: outcome.trace.turn_count,
        prompt_tokens: outcome.trace.cost.prompt_tokens,
        output_tokens: outcome.trace.cost.output_tokens,
        total_cost: outcome.trace.cost.total_cost,
        artifact_dir: dir.display().to_string(),
        rating: None,
        error,
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), String> {
    let mut text = String::new();
    for r in items {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs every prompt and writes `batch.jsonl` in input order. A failing or
/// panicking session only affects its own record.
pub fn run_batch(
    specs: &[PromptSpec],
    workers: usize,
    out: &Path,
    backend: &str,
    scripts: Option<&Path>,
    settings: &RunSettings,
) -> Result<Vec<BatchRecord>, String> {
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BatchRecord>>> = Mutex::new(vec![None; specs.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, specs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(spec) = specs.get(i) else { break };
                let record = catch_unwind(AssertUnwindSafe(|| run_one(spec, out, backend, scripts, settings)))
                    .unwrap_or_else(|_| failed_record(spec, &out.join(&spec.id), "worker panicked".into()));
                let dir = out.join(&spec.id);
                if std::fs::create_dir_all(&dir).is_ok() {
                    let json = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
                    let _ = std::fs::write(dir.join(RECORD_FILE), json);
                }
                slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(record);
            });
        }
    });
    let records: Vec<BatchRecord> = slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.expect("every prompt produces a record"))
        .collect();
    write_jsonl(&out.join(BATCH_FILE), &records)?;
    Ok(records)
}

pub fn read_batch_records(path: &Path) -> Result<Vec<BatchRecord>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| format!("{}: {e}", path.display())))
        .collect()
}

/// Records the rating; a successful record rated below the retention
/// minimum becomes `rejected_by_rating`, and a later passing rating restores it.
pub(crate) fn rate_batch_record(path: &Path, id: &str, score: u8) -> Result<(), String> {
    let mut records = read_batch_records(path)?;
    for r in records.iter_mut().filter(|r| r.id == id) {
        r.rating = Some(score);
        r.status = match r.status {
            BatchStatus::Success | BatchStatus::RejectedByRating if score < RETENTION_MIN_RATING => {
                BatchStatus::RejectedByRating
            }
            BatchStatus::RejectedByRating => BatchStatus::Success,
            s => s,
        };
    }
    write_jsonl(path, &records)
}
