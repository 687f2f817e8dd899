//! Read-only probe queries over a compiled object.

use serde_json::Value as Json;
use thiserror::Error;

use crate::kinematics::{KinematicTree, PoseConfig};
use crate::lang::interp::{Interp, Scope};
use crate::lang::{parse_expression, LangError};
use crate::model::ArticulatedObject;

use super::measure::{MeasureHost, SceneCache};
use super::scene::LocalMeshes;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{code}: {message}")]
pub struct ProbeError {
    pub code: String,
    pub message: String,
}

impl ProbeError {
    fn from_lang(e: LangError, syntax: bool) -> Self {
        let code = match e.code {
            _ if syntax => "probe_syntax_error",
            "undefined_identifier" => "unknown_symbol",
            "step_budget_exceeded" => "probe_budget_exceeded",
            "unknown_part_in_test" => "unknown_part",
            other => other,
        };
        Self {
            code: code.to_string(),
            message: format!("line {}, column {}: {}", e.span.line, e.span.column, e.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOptions {
    /// Evaluation step cap.
    pub step_limit: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { step_limit: 10_000 }
    }
}

pub fn run_probe(
    obj: &ArticulatedObject,
    tree: &KinematicTree,
    meshes: &LocalMeshes,
    query: &str,
    options: &ProbeOptions,
) -> Result<Json, ProbeError> {
    let expr = parse_expression(query).map_err(|e| ProbeError::from_lang(e, true))?;
    let mut host = MeasureHost::new(SceneCache::new(obj, tree, meshes), true);
    let mut interp = Interp::new(&mut host);
    interp.step_limit = options.step_limit;
    let v = interp
        .eval(&expr, &Scope::new(), &PoseConfig::new())
        .map_err(|e| ProbeError::from_lang(e, false))?;
    Ok(v.to_json())
}
