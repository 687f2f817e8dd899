//! Executes the authored test plan against posed geometry.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::geometry::penetration::{penetration_between, SolidClassifier};
use crate::geometry::{min_distance, GeometryError, TriMesh, DEFAULT_SEED};
use crate::kinematics::{KinematicTree, PoseConfig};
use crate::lang::interp::{Interp, Scope};
use crate::lang::{Assertion, AssertionKind, LangError, TestPlan, Value};
use crate::model::ArticulatedObject;

use super::measure::{MeasureHost, SceneCache};
use super::scene::{body_distance, surface_samples, LocalMeshes};
use super::{Finding, ValidationOptions};

const CHECK_STEP_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub label: String,
    pub kind: String,
    pub passed: bool,
    pub detail: String,
    pub pose: PoseConfig,
    pub line: u32,
}

fn fmt_pose(pose: &PoseConfig) -> String {
    pose.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn run_test_plan(
    obj: &ArticulatedObject,
    tree: &KinematicTree,
    meshes: &LocalMeshes,
    plan: &TestPlan,
    options: &ValidationOptions,
) -> (Vec<Finding>, Vec<TestResult>) {
    let mut host = MeasureHost::new(SceneCache::new(obj, tree, meshes), false);
    let mut results = Vec::new();
    let mut findings = Vec::new();
    for a in plan.assertions() {
        let outcome = evaluate(a, &mut host, options);
        let (passed, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("{} at line {}: {}", e.code, e.span.line, e.message)),
        };
        if !passed {
            let mut message = format!("test '{}' failed: {detail}", a.label);
            if !a.pose.is_empty() {
                message.push_str(&format!(" (pose: {})", fmt_pose(&a.pose)));
            }
            findings.push(Finding::failure(
                "test_failure",
                message,
                json!({
                    "label": a.label,
                    "kind": a.kind.name(),
                    "targets": a.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                    "pose": a.pose,
                    "line": a.span.line,
                    "detail": detail,
                }),
            ));
        }
        results.push(TestResult {
            label: a.label.clone(),
            kind: a.kind.name().to_string(),
            passed,
            detail,
            pose: a.pose.clone(),
            line: a.span.line,
        });
    }
    for c in &host.cache.clamped {
        findings.push(Finding::warning(
            "pose_clamped",
            c.to_string(),
            json!({"joint": c.joint, "requested": c.requested, "applied": c.applied}),
        ));
    }
    (findings, results)
}

fn geometry(e: GeometryError, a: &Assertion) -> LangError {
    LangError::new(e.code(), e.to_string(), a.span)
}

fn evaluate(a: &Assertion, host: &mut MeasureHost, options: &ValidationOptions) -> Result<(bool, String), LangError> {
    if let AssertionKind::Check { expr, env } = &a.kind {
        let scope = Scope::from_env(env.clone());
        let mut interp = Interp::new(host);
        interp.step_limit = CHECK_STEP_LIMIT;
        return match interp.eval(expr, &scope, &a.pose)? {
            Value::Bool(true) => Ok((true, "condition held".to_string())),
            Value::Bool(false) => Ok((false, "condition was false".to_string())),
            other => Err(LangError::type_mismatch(
                format!("check condition must be a boolean, got {}", other.type_name()),
                expr.span,
            )),
        };
    }
    let scene = host.cache.scene(&a.pose, a.span)?;
    let mesh = |i: usize| -> Result<&TriMesh, LangError> {
        scene.target_mesh(&a.targets[i]).ok_or_else(|| {
            LangError::new(
                "empty_mesh",
                format!("'{}' has no geometry", a.targets[i]),
                a.span,
            )
        })
    };
    let (ma, mb) = (mesh(0)?, mesh(1)?);
    match &a.kind {
        AssertionKind::Contact { tolerance } => {
            let d = body_distance(ma, mb).map_err(|e| geometry(e, a))?;
            Ok((d <= *tolerance, format!("distance={d:.6}m, tolerance={tolerance}m")))
        }
        AssertionKind::Gap {
            min_gap,
            max_penetration,
        } => {
            let d = body_distance(ma, mb).map_err(|e| geometry(e, a))?;
            let depth = if d > 0.0 {
                0.0
            } else {
                penetration_between(&SolidClassifier::new(ma), &SolidClassifier::new(mb), &options.penetration).depth
            };
            let ok = *min_gap <= d && depth <= *max_penetration;
            Ok((
                ok,
                format!("distance={d:.6}m, min_gap={min_gap}m, penetration={depth:.6}m, max_penetration={max_penetration}m"),
            ))
        }
        AssertionKind::Overlap => {
            let m = penetration_between(&SolidClassifier::new(ma), &SolidClassifier::new(mb), &options.penetration);
            Ok((
                m.overlapping,
                format!("depth={:.6}m, volume={:.3e}m^3", m.depth, m.volume),
            ))
        }
        AssertionKind::Within => {
            let outer = SolidClassifier::new(mb);
            let samples = surface_samples(ma, options.within_samples, DEFAULT_SEED);
            let outside = samples
                .iter()
                .filter(|p| !outer.contains(p) && outer.surface_distance(p) > options.contact_tolerance)
                .count();
            // report how far the inner body strays when it does
            let detail = if outside == 0 {
                format!("all {} surface samples inside", samples.len())
            } else {
                let far = min_distance(ma, mb, 0.0).map(|r| r.distance).unwrap_or(f64::NAN);
                format!(
                    "{outside} of {} surface samples outside (surface distance {far:.6}m)",
                    samples.len()
                )
            };
            Ok((outside == 0, detail))
        }
        AssertionKind::Check { .. } => unreachable!("handled above"),
    }
}
