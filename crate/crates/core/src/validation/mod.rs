//! Quality control, authored-test execution, probes and the compile-signal
//! renderer.

pub mod compile;
pub mod measure;
pub mod probe;
pub mod qc;
pub mod runner;
pub mod scene;
pub mod signals;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::geometry::{
    PenetrationOptions, CONTACT_TOLERANCE, DEFAULT_TESSELLATION, OVERLAP_DEPTH_THRESHOLD,
    OVERLAP_VOLUME_THRESHOLD,
};

pub use compile::{compile_source, CompileOutcome};
pub use probe::{run_probe, ProbeError, ProbeOptions};
pub use qc::run_qc;
pub use runner::{run_test_plan, TestResult};
pub use scene::{LocalMeshes, Scene};
pub use signals::{parse_summary_line, render_compile_signals, LoopState, SummaryCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Failure,
    Warning,
    Note,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Failure => "failure",
            Severity::Warning => "warning",
            Severity::Note => "note",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    /// Structured details; object keys serialize in sorted order.
    pub payload: Json,
}

impl Finding {
    pub fn new(severity: Severity, code: &str, message: impl Into<String>, payload: Json) -> Self {
        Self {
            severity,
            code: code.to_string(),
            message: message.into(),
            payload,
        }
    }

    pub fn failure(code: &str, message: impl Into<String>, payload: Json) -> Self {
        Self::new(Severity::Failure, code, message, payload)
    }

    pub fn warning(code: &str, message: impl Into<String>, payload: Json) -> Self {
        Self::new(Severity::Warning, code, message, payload)
    }

    pub fn note(code: &str, message: impl Into<String>, payload: Json) -> Self {
        Self::new(Severity::Note, code, message, payload)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Failure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::Failure => "failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CompileReport {
    pub findings: Vec<Finding>,
    pub tests: Vec<TestResult>,
    pub timing_ms: f64,
    /// Path of the export manifest when the asset was exported.
    pub manifest: Option<String>,
}

impl CompileReport {
    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    pub fn status(&self) -> Status {
        if self.count(Severity::Failure) > 0 {
            Status::Failure
        } else {
            Status::Success
        }
    }

    pub fn failure_codes(&self) -> std::collections::BTreeSet<String> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Failure)
            .map(|f| f.code.clone())
            .collect()
    }

    pub fn summary(&self) -> SummaryCounts {
        SummaryCounts {
            status: self.status(),
            failures: self.count(Severity::Failure),
            warnings: self.count(Severity::Warning),
            notes: self.count(Severity::Note),
        }
    }
}

/// Thresholds and sampling parameters shared by QC, tests and probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub contact_tolerance: f64,
    pub overlap_depth: f64,
    pub overlap_volume: f64,
    pub penetration: PenetrationOptions,
    pub tessellation: usize,
    pub within_samples: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            contact_tolerance: CONTACT_TOLERANCE,
            overlap_depth: OVERLAP_DEPTH_THRESHOLD,
            overlap_volume: OVERLAP_VOLUME_THRESHOLD,
            penetration: PenetrationOptions::default(),
            tessellation: DEFAULT_TESSELLATION,
            within_samples: 512,
        }
    }
}
