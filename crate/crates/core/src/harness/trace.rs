//! Session traces: the record format, an append-only log, replay and stats.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::sha256_hex;

use super::backend::Usage;
use super::compaction::CompactionEvent;
use super::patch::{apply_patch, replace_exact};
use super::session::SessionStatus;
use super::{HarnessError, Message, TurnRecord};

/// Ratings below this are rejected from the dataset.
pub const RETENTION_MIN_RATING: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub prompt_price_per_mtok: f64,
    pub output_price_per_mtok: f64,
    pub total_cost: f64,
}

impl CostStats {
    pub fn new(usage: Usage, prompt_price: f64, output_price: f64) -> Self {
        Self {
            prompt_tokens: usage.prompt_tokens,
            output_tokens: usage.output_tokens,
            prompt_price_per_mtok: prompt_price,
            output_price_per_mtok: output_price,
            total_cost: (usage.prompt_tokens as f64 * prompt_price + usage.output_tokens as f64 * output_price) / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub turn: usize,
    pub tool: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub prompt: String,
    pub prompt_sha256: String,
    pub messages: Vec<Message>,
    pub turns: Vec<TurnRecord>,
    pub feedback: Vec<FeedbackEntry>,
    pub compactions: Vec<CompactionEvent>,
    pub initial_program: String,
    pub final_program: String,
    pub final_program_sha256: String,
    pub provider: String,
    pub model: String,
    pub status: SessionStatus,
    pub error: Option<String>,
    pub turn_count: usize,
    pub cost: CostStats,
    pub artifacts: Vec<String>,
    pub rating: Option<u8>,
}

impl TraceRecord {
    pub fn hashes_valid(&self) -> bool {
        sha256_hex(self.prompt.as_bytes()) == self.prompt_sha256
            && sha256_hex(self.final_program.as_bytes()) == self.final_program_sha256
    }

    pub fn rate(&mut self, score: u8) -> Result<(), HarnessError> {
        if !(1..=5).contains(&score) {
            return Err(HarnessError::new("invalid_rating", format!("score {score} is outside 1..=5")));
        }
        self.rating = Some(score);
        Ok(())
    }

    pub fn rejected_by_rating(&self) -> bool {
        self.rating.is_some_and(|r| r < RETENTION_MIN_RATING)
    }

    /// Successful and not rejected by a curator.
    pub fn retained(&self) -> bool {
        self.status == SessionStatus::Success && !self.rejected_by_rating()
    }

    pub fn backend_key(&self) -> String {
        format!("{}/{}", self.provider, self.model)
    }
}

/// Re-applies the recorded edits to the initial program.
pub fn replay_program(trace: &TraceRecord) -> Result<String, HarnessError> {
    let mut text = trace.initial_program.clone();
    for r in &trace.turns {
        let TurnRecord::Turn {
            turn,
            call: Some(c),
            result: Some(res),
            ..
        } = r
        else {
            continue;
        };
        if !res.ok {
            continue;
        }
        let s = |k: &str| c.args.get(k).and_then(|v| v.as_str()).unwrap_or_default();
        let next = match c.name.as_str() {
            "write_file" => Ok(s("content").to_string()),
            "apply_patch" => match &c.args {
                serde_json::Value::String(p) => apply_patch(&text, p),
                _ => apply_patch(&text, s("patch")),
            },
            "replace" => {
                let n = c.args.get("expected_count").and_then(|v| v.as_u64()).unwrap_or(1) as usize;
                replace_exact(&text, s("old"), s("new"), n)
            }
            _ => continue,
        };
        text = next.map_err(|e| {
            HarnessError::new(
                "replay_mismatch",
                format!("turn {turn} {} succeeded when recorded but fails on replay: {e}", c.name),
            )
        })?;
    }
    Ok(text)
}

static APPEND_LOCK: Mutex<()> = Mutex::new(());

/// Appends one JSON line. Each record is written with a single call on a
/// file opened for append.
pub fn append_trace(path: &Path, record: &TraceRecord) -> Result<(), HarnessError> {
    let mut line = serde_json::to_string(record).expect("trace serializes");
    line.push('\n');
    let _guard = APPEND_LOCK.lock().unwrap_or_else(|p| p.into_inner());
    let io = |e: std::io::Error| HarnessError::new("io_error", format!("{}: {e}", path.display()));
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    f.write_all(line.as_bytes()).map_err(io)
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::new("io_error", format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| HarnessError::new("invalid_trace", format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Rewrites the whole log through a temporary file.
pub fn write_traces(path: &Path, records: &[TraceRecord]) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::new("io_error", format!("{}: {e}", path.display()));
    let tmp = path.with_extension("tmp");
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace serializes"));
        out.push('\n');
    }
    std::fs::write(&tmp, out).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendStats {
    pub backend: String,
    pub cost_logs: usize,
    pub retained: usize,
    pub total_cost: f64,
    pub mean_cost: f64,
    pub median_cost: f64,
    pub mean_turns: f64,
    pub median_turns: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Per-backend aggregates, ordered by backend key.
pub fn aggregate_stats(records: &[TraceRecord]) -> Vec<BackendStats> {
    let mut groups: BTreeMap<String, Vec<&TraceRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.backend_key()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(backend, rs)| {
            let costs: Vec<f64> = rs.iter().map(|r| r.cost.total_cost).collect();
            let turns: Vec<f64> = rs.iter().map(|r| r.turn_count as f64).collect();
            let n = rs.len() as f64;
            BackendStats {
                backend,
                cost_logs: rs.len(),
                retained: rs.iter().filter(|r| r.retained()).count(),
                total_cost: costs.iter().sum(),
                mean_cost: costs.iter().sum::<f64>() / n,
                median_cost: median(costs),
                mean_turns: turns.iter().sum::<f64>() / n,
                median_turns: median(turns),
            }
        })
        .collect()
}

pub fn render_stats_table(stats: &[BackendStats]) -> String {
    let mut out = String::from("| Backend | Cost logs | Retained | Total cost | Mean/med. cost | Mean/med. turns |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    for s in stats {
        out.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.2} / {:.2} | {:.1} / {:.1} |\n",
            s.backend, s.cost_logs, s.retained, s.total_cost, s.mean_cost, s.median_cost, s.mean_turns, s.median_turns
        ));
    }
    out
}
