//! The full compile pipeline: parse, build, plan, QC and authored tests.

use std::time::Instant;

use serde_json::json;

use crate::kinematics::{build_kinematic_tree, KinematicTree};
use crate::lang::{evaluate_build, extract_test_plan, parse_program, LangError, TestPlan};
use crate::model::ArticulatedObject;

use super::qc::run_qc;
use super::runner::run_test_plan;
use super::scene::LocalMeshes;
use super::{CompileReport, Finding, ValidationOptions};

/// Model error codes that describe a malformed articulation.
const JOINT_ERROR_CODES: [&str; 6] = [
    "limits_required",
    "limits_forbidden",
    "invalid_limits",
    "zero_axis",
    "invalid_mimic",
    "self_joint",
];

pub struct CompileOutcome {
    pub report: CompileReport,
    pub object: Option<ArticulatedObject>,
    pub tree: Option<KinematicTree>,
    pub plan: Option<TestPlan>,
    pub meshes: Option<LocalMeshes>,
}

fn error_finding(e: &LangError, source: &str) -> Finding {
    let inner = e
        .message
        .strip_prefix('[')
        .and_then(|m| m.split_once(']'))
        .map(|(c, _)| c);
    let code = match inner {
        Some(c) if JOINT_ERROR_CODES.contains(&c) => "joint_limits_invalid",
        _ if e.code == "syntax_error" => "parse_error",
        _ => "runtime_error",
    };
    let d = e.diagnostic(source);
    Finding::failure(
        code,
        e.to_string(),
        json!({"error": e.code, "line": d.line, "column": d.column, "excerpt": d.excerpt}),
    )
}

fn failed(report: CompileReport, start: Instant, object: Option<ArticulatedObject>) -> CompileOutcome {
    let mut report = report;
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    CompileOutcome {
        report,
        object,
        tree: None,
        plan: None,
        meshes: None,
    }
}

pub fn compile_source(source: &str, options: &ValidationOptions) -> CompileOutcome {
    let start = Instant::now();
    let mut report = CompileReport::default();
    let program = match parse_program(source) {
        Ok(p) => p,
        Err(e) => {
            let mut f = error_finding(&e, source);
            f.code = "parse_error".to_string();
            report.findings.push(f);
            return failed(report, start, None);
        }
    };
    let build = match evaluate_build(&program) {
        Ok(b) => b,
        Err(e) => {
            report.findings.push(error_finding(&e, source));
            return failed(report, start, None);
        }
    };
    for n in &build.notes {
        report.findings.push(Finding::note(
            &n.code,
            n.message.clone(),
            json!({"line": n.span.line}),
        ));
    }
    let obj = build.object.clone();
    if let Err(e) = obj.validate() {
        let code = if JOINT_ERROR_CODES.contains(&e.code()) {
            "joint_limits_invalid"
        } else {
            "runtime_error"
        };
        report
            .findings
            .push(Finding::failure(code, e.to_string(), json!({"error": e.code()})));
        return failed(report, start, Some(obj));
    }
    let tree = match build_kinematic_tree(&obj) {
        Ok(t) => t,
        Err(e) => {
            report.findings.push(Finding::failure(
                "runtime_error",
                format!("{}: {e}", e.code()),
                json!({"error": e.code()}),
            ));
            return failed(report, start, Some(obj));
        }
    };
    let plan = match extract_test_plan(&program, &build) {
        Ok(p) => p,
        Err(e) => {
            report.findings.push(error_finding(&e, source));
            return failed(report, start, Some(obj));
        }
    };
    let meshes = match LocalMeshes::build(&obj, options.tessellation) {
        Ok(m) => m,
        Err(e) => {
            report.findings.push(Finding::failure(
                "runtime_error",
                format!("{}: {e}", e.code()),
                json!({"error": e.code()}),
            ));
            return failed(report, start, Some(obj));
        }
    };
    let scene = meshes.pose(&tree.rest_pose());
    match run_qc(&obj, &tree, &scene, &plan, options) {
        Ok(qc) => {
            report.findings.extend(qc.findings);
            report.findings.extend(qc.allowance_notes);
        }
        Err(e) => report.findings.push(Finding::failure(
            "runtime_error",
            format!("{}: {e}", e.code()),
            json!({"error": e.code()}),
        )),
    }
    let (findings, tests) = run_test_plan(&obj, &tree, &meshes, &plan, options);
    report.findings.extend(findings);
    report.tests = tests;
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    CompileOutcome {
        report,
        object: Some(obj),
        tree: Some(tree),
        plan: Some(plan),
        meshes: Some(meshes),
    }
}
