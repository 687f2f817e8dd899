//! The `<compile_signals>` text block returned to the agent after a compile.

use super::{CompileReport, Finding, Severity, Status};

/// Session state that drives the streak sentence and response rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoopState {
    /// Failed compiles in a row, including this one.
    pub consecutive_failures: usize,
    pub turn: usize,
    /// The failure codes match those of the previous compile.
    pub repeated_failure_codes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummaryCounts {
    pub status: Status,
    pub failures: usize,
    pub warnings: usize,
    pub notes: usize,
}

impl std::fmt::Display for SummaryCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "status={} failures={} warnings={} notes={}",
            self.status.as_str(),
            self.failures,
            self.warnings,
            self.notes
        )
    }
}

pub const RULE_ISOLATED: &str = "Treat the compiler-owned floating/disconnected part finding as primary evidence before tuning authored exact checks.";
pub const RULE_REPAIR_LOOP: &str = "You are in a repair loop. A short probe_model snippet is likely to be more informative than another small placement or tolerance tweak.";
pub const RULE_CLEAN: &str = "Compile is clean. If you cannot name one specific remaining defect, conclude.";

pub fn response_rules(report: &CompileReport, state: &LoopState) -> Vec<&'static str> {
    let mut rules = Vec::new();
    if report.findings.iter().any(|f| f.code == "isolated_part" && f.severity == Severity::Failure) {
        rules.push(RULE_ISOLATED);
    }
    if report.status() == Status::Failure && state.consecutive_failures >= 2 && state.repeated_failure_codes {
        rules.push(RULE_REPAIR_LOOP);
    }
    if report.status() == Status::Success && report.count(Severity::Warning) == 0 {
        rules.push(RULE_CLEAN);
    }
    rules
}

fn section(out: &mut String, tag: &str, items: &[&Finding]) {
    if items.is_empty() {
        return;
    }
    out.push_str(&format!("\n<{tag}>\n"));
    for f in items {
        out.push_str(&format!("- [{}] {}\n", f.code, f.message));
    }
    out.push_str(&format!("</{tag}>\n"));
}

pub fn render_compile_signals(report: &CompileReport, state: &LoopState) -> String {
    let mut out = String::from("<compile_signals>\n<summary>\n");
    out.push_str(&report.summary().to_string());
    out.push('\n');
    if report.status() == Status::Failure && state.consecutive_failures >= 2 {
        out.push_str(&format!(
            "This is compile failure {} in a row.\n",
            state.consecutive_failures
        ));
    }
    out.push_str("</summary>\n");
    let of = |s: Severity| report.findings.iter().filter(|f| f.severity == s).collect::<Vec<_>>();
    section(&mut out, "failures", &of(Severity::Failure));
    section(&mut out, "warnings", &of(Severity::Warning));
    section(&mut out, "notes", &of(Severity::Note));
    let rules = response_rules(report, state);
    if !rules.is_empty() {
        out.push_str("\n<response_rules>\n");
        for r in rules {
            out.push_str(&format!("- {r}\n"));
        }
        out.push_str("</response_rules>\n");
    }
    out.push_str("</compile_signals>");
    out
}

/// Recovers the counts from the first `status=` line of a rendered block.
pub fn parse_summary_line(text: &str) -> Option<SummaryCounts> {
    let line = text.lines().find(|l| l.starts_with("status="))?;
    let mut status = None;
    let (mut failures, mut warnings, mut notes) = (None, None, None);
    for field in line.split_whitespace() {
        let (k, v) = field.split_once('=')?;
        match k {
            "status" => {
                status = Some(match v {
                    "success" => Status::Success,
                    "failure" => Status::Failure,
                    _ => return None,
                })
            }
            "failures" => failures = v.parse().ok(),
            "warnings" => warnings = v.parse().ok(),
            "notes" => notes = v.parse().ok(),
            _ => return None,
        }
    }
    Some(SummaryCounts {
        status: status?,
        failures: failures?,
        warnings: warnings?,
        notes: notes?,
    })
}
