use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::json;

use super::ast::Expr;
use crate::kinematics::PoseConfig;
use crate::math::{Transform, Vec3};
use crate::model::{Geometry, Mimic};

/// Position limits plus effort/velocity as authored; missing fields are
/// filled with defaults when the joint is built.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitsValue {
    pub lower: f64,
    pub upper: f64,
    pub effort: Option<f64>,
    pub velocity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Unit,
    Num(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
    Geometry(Box<Geometry>),
    Origin(Transform),
    Part(String),
    Visual { part: String, name: String },
    Joint(String),
    Limits(LimitsValue),
    Mimic(Mimic),
    Material(String),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Unit => "nothing",
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "bool",
            Value::List(_) => "list",
            Value::Map(_) => "map",
            Value::Geometry(_) => "geometry",
            Value::Origin(_) => "origin",
            Value::Part(_) => "part",
            Value::Visual { .. } => "visual",
            Value::Joint(_) => "joint",
            Value::Limits(_) => "limits",
            Value::Mimic(_) => "mimic",
            Value::Material(_) => "material",
        }
    }

    pub fn vec3(v: Vec3) -> Value {
        Value::List(vec![Value::Num(v.x), Value::Num(v.y), Value::Num(v.z)])
    }

    pub fn as_vec3(&self) -> Option<Vec3> {
        match self {
            Value::List(items) if items.len() == 3 => {
                let mut out = [0.0; 3];
                for (o, item) in out.iter_mut().zip(items) {
                    match item {
                        Value::Num(n) => *o = *n,
                        _ => return None,
                    }
                }
                Some(Vec3::new(out[0], out[1], out[2]))
            }
            _ => None,
        }
    }

    /// Name carried by a part, joint or material handle or by a plain string.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Value::Str(s) | Value::Part(s) | Value::Joint(s) | Value::Material(s) => Some(s),
            _ => None,
        }
    }

    /// Structured rendering for probe output and diagnostics.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Unit => serde_json::Value::Null,
            Value::Num(n) => num_json(*n),
            Value::Str(s) => json!(s),
            Value::Bool(b) => json!(b),
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
            Value::Map(m) => serde_json::Value::Object(
                m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
            ),
            Value::Geometry(g) => serde_json::to_value(g).unwrap_or(serde_json::Value::Null),
            Value::Origin(t) => json!({
                "xyz": [num_json(t.xyz.x), num_json(t.xyz.y), num_json(t.xyz.z)],
                "rpy": [num_json(t.rpy.x), num_json(t.rpy.y), num_json(t.rpy.z)],
            }),
            Value::Part(p) => json!({ "part": p }),
            Value::Visual { part, name } => json!({ "part": part, "visual": name }),
            Value::Joint(j) => json!({ "joint": j }),
            Value::Limits(l) => json!({
                "lower": num_json(l.lower),
                "upper": num_json(l.upper),
                "effort": l.effort.map(num_json),
                "velocity": l.velocity.map(num_json),
            }),
            Value::Mimic(m) => json!({
                "joint": m.joint,
                "multiplier": num_json(m.multiplier),
                "offset": num_json(m.offset),
            }),
            Value::Material(m) => json!({ "material": m }),
        }
    }
}

pub fn num_json(n: f64) -> serde_json::Value {
    serde_json::Number::from_f64(if n == 0.0 { 0.0 } else { n })
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Shortest round-trip decimal, the form `str()` produces.
pub fn format_number(n: f64) -> String {
    if n == 0.0 {
        "0".into()
    } else {
        format!("{n}")
    }
}

/// A `let` in the tests block whose value depends on measurements; it is
/// evaluated when a check runs, under the pose it was declared in.
#[derive(Debug, Clone, PartialEq)]
pub struct Deferred {
    pub expr: Expr,
    pub env: Env,
    pub pose: PoseConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Value(Value),
    Deferred(Arc<Deferred>),
}

pub type Env = BTreeMap<String, Binding>;
