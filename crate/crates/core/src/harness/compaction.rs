//! Replacing the middle of a long history with one summary record.

use serde::{Deserialize, Serialize};

use super::backend::AgentBackend;
use super::session::SessionState;
use super::{HarnessError, Message, TurnRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactionPolicy {
    /// Prompt-token pressure threshold.
    pub threshold: u64,
    pub hard_fraction: f64,
    pub soft_failures: usize,
    pub soft_pressure: f64,
    pub min_middle: usize,
    /// Raw records kept verbatim at the end.
    pub tail: usize,
}

impl Default for CompactionPolicy {
    fn default() -> Self {
        Self {
            threshold: 280_000,
            hard_fraction: 0.9,
            soft_failures: 3,
            soft_pressure: 0.5,
            min_middle: 4,
            tail: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompactionTrigger {
    Hard,
    Soft,
}

impl CompactionPolicy {
    pub fn with_threshold(threshold: u64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    pub fn pressure(&self, prompt_tokens: u64) -> f64 {
        prompt_tokens as f64 / self.threshold as f64
    }

    pub fn middle_len(&self, history_len: usize) -> usize {
        history_len.saturating_sub(self.tail)
    }

    pub fn trigger(&self, prompt_tokens: u64, consecutive_failures: usize, history_len: usize) -> Option<CompactionTrigger> {
        let pressure = self.pressure(prompt_tokens);
        if pressure >= self.hard_fraction {
            Some(CompactionTrigger::Hard)
        } else if consecutive_failures >= self.soft_failures
            && pressure >= self.soft_pressure
            && self.middle_len(history_len) >= self.min_middle
        {
            Some(CompactionTrigger::Soft)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactionEvent {
    pub turn: usize,
    pub trigger: CompactionTrigger,
    pub prompt_tokens: u64,
    pub replaced: usize,
    /// `backend` or `extractive`.
    pub source: String,
}

fn clip(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

fn failure_lines(signals: &str) -> Vec<&str> {
    let Some(start) = signals.find("<failures>") else {
        return Vec::new();
    };
    let end = signals[start..].find("</failures>").map_or(signals.len(), |e| start + e);
    signals[start..end].lines().filter(|l| l.starts_with("- [")).collect()
}

fn summary_line(signals: &str) -> Option<&str> {
    signals.lines().find(|l| l.starts_with("status="))
}

/// Deterministic summary built from the replaced records.
pub fn extractive_summary(state: &SessionState, middle: &[TurnRecord]) -> String {
    let mut findings = Vec::new();
    let mut last_state: Option<String> = None;
    let mut open_failures: Vec<String> = Vec::new();
    for r in middle {
        match r {
            TurnRecord::Summary { text, .. } => {
                findings.push(format!("- earlier summary: {}", clip(&text.replace('\n', " "), 300)));
            }
            TurnRecord::Turn { turn, call, result, .. } => {
                let (Some(c), Some(res)) = (call, result) else {
                    continue;
                };
                if c.name == "compile_model" {
                    let line = summary_line(&res.content).unwrap_or("no summary");
                    findings.push(format!("- turn {turn} compile_model: {line}"));
                    open_failures = failure_lines(&res.content).iter().map(|l| clip(l, 240)).collect();
                    for l in &open_failures {
                        findings.push(format!("  {l}"));
                    }
                    last_state = Some(line.to_string());
                } else if !res.ok {
                    findings.push(format!("- turn {turn} {}: {}", c.name, clip(&res.content, 200)));
                } else if c.name == "probe_model" {
                    findings.push(format!(
                        "- turn {turn} probe_model: {}",
                        clip(&res.content.replace('\n', " "), 200)
                    ));
                } else {
                    findings.push(format!("- turn {turn} {}: ok", c.name));
                }
            }
        }
    }
    let compile_state = last_state
        .or_else(|| state.last_compile.as_ref().map(|c| c.summary.clone()))
        .unwrap_or_else(|| "not compiled yet".to_string());
    let next = if open_failures.is_empty() {
        "- Re-run compile_model on the current model.apl and conclude when it is clean.".to_string()
    } else {
        let codes: Vec<&str> = open_failures
            .iter()
            .filter_map(|l| l.strip_prefix("- [").and_then(|r| r.split(']').next()))
            .collect();
        format!(
            "- Resolve the open failures ({}); probe geometry before another small tweak.",
            codes.join(", ")
        )
    };
    format!(
        "<compacted_history records=\"{}\">\n## Task requirements\n{}\n\n## Constraints\n- model.apl is the only editable file; docs/ is read-only.\n- No floating parts and no unintentional overlaps; justify intentional ones with scoped allowances.\n\n## Tool findings\n{}\n\n## Compile state\n{}\n\n## Next steps\n{}\n</compacted_history>",
        middle.len(),
        clip(state.prompt.trim(), 600),
        if findings.is_empty() { "- none".to_string() } else { findings.join("\n") },
        compile_state,
        next
    )
}

/// Replaces everything but the last `tail` records with one summary. The
/// prefix messages live outside the history and are never touched.
pub fn compact_history(
    state: &mut SessionState,
    policy: &CompactionPolicy,
    backend: Option<&mut dyn AgentBackend>,
) -> Result<(usize, String), HarnessError> {
    let n = state.history.len();
    if n < policy.tail + policy.min_middle {
        return Err(HarnessError::new(
            "nothing_to_compact",
            format!(
                "history has {n} records; compaction needs at least {}",
                policy.tail + policy.min_middle
            ),
        ));
    }
    let cut = n - policy.tail;
    let middle = &state.history[..cut];
    let from_backend = match backend {
        Some(b) => {
            let msgs: Vec<Message> = middle.iter().flat_map(TurnRecord::messages).collect();
            b.summarize(&msgs).ok().flatten()
        }
        None => None,
    };
    let (text, source) = match from_backend {
        Some(t) => (
            format!("<compacted_history records=\"{cut}\">\n{}\n</compacted_history>", t.trim()),
            "backend",
        ),
        None => (extractive_summary(state, middle), "extractive"),
    };
    let tail = state.history.split_off(cut);
    state.history = std::iter::once(TurnRecord::Summary { text, replaced: cut })
        .chain(tail)
        .collect();
    Ok((cut, source.to_string()))
}
