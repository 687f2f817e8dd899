//! The asset program language: a small deterministic DSL with a `build`
//! block that constructs an articulated object and an optional `tests` block
//! that declares checks and QC allowances.

pub mod ast;
pub mod build;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod plan;
pub mod value;

use serde::{Deserialize, Serialize};

pub use ast::AssetProgram;
pub use build::{evaluate_build, BuildNote, BuildOutput};
pub use parser::{parse_expression, parse_program};
pub use plan::{extract_test_plan, Allowance, AllowanceKind, Assertion, AssertionKind, Directive, Target, TestPlan};
pub use value::Value;

/// Source position: 1-based line and column plus the byte range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangError {
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl LangError {
    pub fn new(code: &'static str, message: impl Into<String>, span: Span) -> Self {
        Self {
            code,
            message: message.into(),
            span,
        }
    }

    pub fn syntax(message: impl Into<String>, span: Span) -> Self {
        Self::new("syntax_error", message, span)
    }

    pub fn runtime(message: impl Into<String>, span: Span) -> Self {
        Self::new("runtime_error", message, span)
    }

    pub fn type_mismatch(message: impl Into<String>, span: Span) -> Self {
        Self::new("type_mismatch", message, span)
    }

    pub fn diagnostic(&self, source: &str) -> Diagnostic {
        Diagnostic {
            severity: DiagnosticSeverity::Error,
            code: self.code.to_string(),
            message: self.message.clone(),
            line: self.span.line,
            column: self.span.column,
            excerpt: source
                .lines()
                .nth(self.span.line.saturating_sub(1) as usize)
                .unwrap_or("")
                .to_string(),
        }
    }
}

impl std::fmt::Display for LangError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} at line {}, column {}: {}",
            self.code, self.span.line, self.span.column, self.message
        )
    }
}

impl std::error::Error for LangError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: DiagnosticSeverity,
    pub code: String,
    pub message: String,
    pub line: u32,
    pub column: u32,
    pub excerpt: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "line {}, column {}: {}\n  {}",
            self.line, self.column, self.message, self.excerpt
        )
    }
}
