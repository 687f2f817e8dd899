//! Evaluation of the `build` block into an [`ArticulatedObject`].

use serde::{Deserialize, Serialize};

use super::ast::{AssetProgram, Stmt};
use super::interp::{Args, Bound, CallCtx, Host, Interp, Scope};
use super::value::{Binding, Env, LimitsValue, Value};
use super::{LangError, Span};
use crate::geometry::procedural::{
    HingeParams, PanelParams, ProceduralGeometry, ProceduralSpec, TubeParams, WheelParams,
};
use crate::kinematics::PoseConfig;
use crate::math::{Transform, Vec3};
use crate::model::{
    ArticulatedObject, Geometry, JointSpec, JointType, Mimic, MotionLimits, MotionProperties, ModelError,
    Rgba,
};

pub const MAX_REPEAT: i64 = 256;
pub const DEFAULT_EFFORT: f64 = 10.0;
pub const DEFAULT_VELOCITY: f64 = 1.0;
pub const DEFAULT_OBJECT_NAME: &str = "object";
const BUILD_STEP_LIMIT: u64 = 5_000_000;

/// A default the evaluator filled in, surfaced as a compile note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildNote {
    pub code: String,
    pub message: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub object: ArticulatedObject,
    pub notes: Vec<BuildNote>,
    /// Top-level `let` bindings, visible to the tests block.
    pub env: Env,
}

pub fn evaluate_build(program: &AssetProgram) -> Result<BuildOutput, LangError> {
    let mut host = BuildHost {
        obj: None,
        notes: Vec::new(),
    };
    let mut scope = Scope::new();
    {
        let mut interp = Interp::new(&mut host);
        interp.step_limit = BUILD_STEP_LIMIT;
        run_build(&mut interp, &program.build.stmts, &mut scope)?;
    }
    let object = match host.obj {
        Some(o) => o,
        None => ArticulatedObject::new(DEFAULT_OBJECT_NAME).expect("default name is valid"),
    };
    Ok(BuildOutput {
        object,
        notes: host.notes,
        env: scope.snapshot(),
    })
}

/// Iteration values of `start..end`, checked against the loop bound.
pub fn repeat_range(start: i64, end: i64, span: Span) -> Result<std::ops::Range<i64>, LangError> {
    if end - start > MAX_REPEAT {
        return Err(LangError::new(
            "loop_bound_exceeded",
            format!("repeat runs {} iterations; the limit is {MAX_REPEAT}", end - start),
            span,
        ));
    }
    Ok(start..end.max(start))
}

fn run_build(interp: &mut Interp, stmts: &[Stmt], scope: &mut Scope) -> Result<(), LangError> {
    let rest = PoseConfig::new();
    for stmt in stmts {
        match stmt {
            Stmt::Let { name, value, .. } => {
                let v = interp.eval(value, scope, &rest)?;
                scope.set(name, Binding::Value(v));
            }
            Stmt::Call(call) => {
                let e = super::ast::Expr {
                    kind: super::ast::ExprKind::Call(call.clone()),
                    span: call.span,
                };
                interp.eval(&e, scope, &rest)?;
            }
            Stmt::Repeat {
                var,
                start,
                end,
                body,
                span,
            } => {
                for i in repeat_range(*start, *end, *span)? {
                    scope.push();
                    scope.set(var, Binding::Value(Value::Num(i as f64)));
                    let r = run_build(interp, body, scope);
                    scope.pop();
                    r?;
                }
            }
            Stmt::Pose { span, .. } => {
                return Err(LangError::syntax("pose blocks are only allowed in the tests block", *span))
            }
        }
    }
    Ok(())
}

struct BuildHost {
    obj: Option<ArticulatedObject>,
    notes: Vec<BuildNote>,
}

fn model_err(e: ModelError, span: Span) -> LangError {
    LangError::runtime(format!("[{}] {e}", e.code()), span)
}

impl BuildHost {
    fn obj(&mut self) -> &mut ArticulatedObject {
        self.obj
            .get_or_insert_with(|| ArticulatedObject::new(DEFAULT_OBJECT_NAME).expect("valid"))
    }

    fn note(&mut self, message: String, span: Span) {
        self.notes.push(BuildNote {
            code: "default_applied".into(),
            message,
            span,
        });
    }

    fn part_id(&mut self, b: &Bound, param: &str) -> Result<crate::model::PartId, LangError> {
        let name = b.name(param)?;
        self.obj()
            .part_id(&name)
            .ok_or_else(|| model_err(ModelError::UnknownPart(name), b.span_of(param)))
    }

    fn visual(&mut self, b: Bound) -> Result<Value, LangError> {
        let part = self.part_id(&b, "part")?;
        let geometry = geometry_arg(&b, "geometry")?;
        let origin = origin_arg(&b, "origin")?;
        let rgba = match b.get("rgba") {
            None => None,
            Some((v, span)) => Some(rgba_of(v, *span)?),
        };
        let material = b.opt_name("material")?;
        if rgba.is_some() && material.is_none() {
            return Err(LangError::runtime("rgba= requires material=", b.span_of("rgba")));
        }
        let obj = self.obj();
        let index = obj.part(part).visuals.len();
        let name = b.opt_str("name")?.unwrap_or_else(|| format!("visual_{index}"));
        let part_name = obj.part(part).name.clone();
        obj.add_visual(
            part,
            &name,
            geometry,
            origin,
            material.as_deref().map(|m| (m, rgba)),
        )
        .map_err(|e| model_err(e, b.span))?;
        Ok(Value::Visual {
            part: part_name,
            name,
        })
    }

    fn joint(&mut self, b: Bound) -> Result<Value, LangError> {
        let name = b.str("name")?;
        let type_name = b.str("type")?;
        let joint_type = JointType::parse(&type_name).ok_or_else(|| {
            LangError::runtime(
                format!("unknown joint type '{type_name}'; expected revolute, prismatic, continuous or fixed"),
                b.span_of("type"),
            )
        })?;
        let parent = b.name("parent")?;
        let child = b.name("child")?;
        let origin = origin_arg(&b, "origin")?;
        let axis = match b.opt_vec3("axis")? {
            Some(a) => a,
            None => {
                if joint_type != JointType::Fixed {
                    self.note(format!("joint '{name}': axis defaulted to [1, 0, 0]"), b.span);
                }
                Vec3::x()
            }
        };
        let mut limits = match b.value("limits") {
            None => None,
            Some(Value::Limits(l)) => Some(l.clone()),
            Some(other) => {
                return Err(LangError::type_mismatch(
                    format!("limits= must be limits(...), got {}", other.type_name()),
                    b.span_of("limits"),
                ))
            }
        };
        let lower = b.opt_num("lower")?;
        let upper = b.opt_num("upper")?;
        match (lower, upper) {
            (None, None) => {}
            (Some(lower), Some(upper)) => {
                if limits.is_some() {
                    return Err(LangError::runtime(
                        "give either limits= or lower=/upper=, not both",
                        b.span,
                    ));
                }
                limits = Some(LimitsValue {
                    lower,
                    upper,
                    effort: None,
                    velocity: None,
                });
            }
            _ => {
                return Err(LangError::runtime(
                    "lower= and upper= must be given together",
                    b.span,
                ))
            }
        }
        let mut effort = b.opt_num("effort")?;
        let mut velocity = b.opt_num("velocity")?;
        if let Some(l) = &limits {
            effort = effort.or(l.effort);
            velocity = velocity.or(l.velocity);
        }
        let mut spec = JointSpec::new(&name, joint_type, &parent, &child, origin, axis);
        let mut defaults = Vec::new();
        let mut fill = |v: Option<f64>, what: &str, default: f64| {
            v.unwrap_or_else(|| {
                defaults.push(format!("{what} defaulted to {default}"));
                default
            })
        };
        match joint_type {
            JointType::Fixed => {
                if effort.is_some() || velocity.is_some() {
                    return Err(LangError::runtime(
                        format!("fixed joint '{name}' takes no effort or velocity"),
                        b.span,
                    ));
                }
                spec.limits = limits.map(|l| MotionLimits::new(l.lower, l.upper, 0.0, 0.0));
            }
            JointType::Continuous => {
                let effort = fill(effort, "effort", DEFAULT_EFFORT);
                let velocity = fill(velocity, "velocity", DEFAULT_VELOCITY);
                spec.limits = limits.map(|l| MotionLimits::new(l.lower, l.upper, effort, velocity));
                spec.properties = Some(MotionProperties { effort, velocity });
            }
            JointType::Revolute | JointType::Prismatic => {
                if let Some(l) = limits {
                    let effort = fill(effort, "effort", DEFAULT_EFFORT);
                    let velocity = fill(velocity, "velocity", DEFAULT_VELOCITY);
                    spec.limits = Some(MotionLimits::new(l.lower, l.upper, effort, velocity));
                }
            }
        }
        if let Some(v) = b.value("mimic") {
            match v {
                Value::Mimic(m) => spec.mimic = Some(m.clone()),
                other => {
                    return Err(LangError::type_mismatch(
                        format!("mimic= must be mimic(...), got {}", other.type_name()),
                        b.span_of("mimic"),
                    ))
                }
            }
        }
        self.obj()
            .add_articulation(spec)
            .map_err(|e| model_err(e, b.span))?;
        if !defaults.is_empty() {
            self.note(format!("joint '{name}': {}", defaults.join(", ")), b.span);
        }
        Ok(Value::Joint(name))
    }
}

fn origin_arg(b: &Bound, param: &str) -> Result<Transform, LangError> {
    match b.get(param) {
        None => Ok(Transform::identity()),
        Some((Value::Origin(t), _)) => Ok(*t),
        Some((v, span)) => v.as_vec3().map(|xyz| Transform::new(xyz, Vec3::zeros())).ok_or_else(|| {
            LangError::type_mismatch(
                format!("{param}= must be origin(...) or a 3-vector, got {}", v.type_name()),
                *span,
            )
        }),
    }
}

fn geometry_arg(b: &Bound, param: &str) -> Result<Geometry, LangError> {
    let (v, span) = b.require(param)?;
    match v {
        Value::Geometry(g) => Ok((**g).clone()),
        other => Err(LangError::type_mismatch(
            format!("{param} must be a geometry, got {}", other.type_name()),
            *span,
        )),
    }
}

fn rgba_of(v: &Value, span: Span) -> Result<Rgba, LangError> {
    match v {
        Value::List(items) if items.len() == 4 => {
            let mut c = [0.0; 4];
            for (o, i) in c.iter_mut().zip(items) {
                match i {
                    Value::Num(n) if (0.0..=1.0).contains(n) => *o = *n,
                    _ => {
                        return Err(LangError::runtime(
                            "rgba components must be numbers in [0, 1]",
                            span,
                        ))
                    }
                }
            }
            Ok(Rgba(c))
        }
        other => Err(LangError::type_mismatch(
            format!("rgba must be a list of 4 numbers, got {}", other.type_name()),
            span,
        )),
    }
}

fn geometry_value(g: Geometry, span: Span) -> Result<Value, LangError> {
    g.validate().map_err(|e| model_err(e, span))?;
    Ok(Value::Geometry(Box::new(g)))
}

fn procedural(spec: ProceduralSpec, span: Span) -> Result<Value, LangError> {
    let g = ProceduralGeometry::new(spec)
        .map_err(|e| LangError::runtime(format!("[{}] {e}", e.code()), span))?;
    Ok(Value::Geometry(Box::new(Geometry::Procedural(g))))
}

/// Geometry constructors, shared with the probe scope.
pub fn geometry_builtin(name: &str, args: Args) -> Result<Option<Value>, LangError> {
    let span = args.span;
    let v = match name {
        "box" => {
            let b = args.bind(&["size"])?;
            geometry_value(Geometry::Box { size: b.vec3("size")? }, span)?
        }
        "cylinder" => {
            let b = args.bind(&["radius", "length"])?;
            geometry_value(
                Geometry::Cylinder {
                    radius: b.num("radius")?,
                    length: b.num("length")?,
                },
                span,
            )?
        }
        "sphere" => {
            let b = args.bind(&["radius"])?;
            geometry_value(Geometry::Sphere { radius: b.num("radius")? }, span)?
        }
        "cone" => {
            let b = args.bind(&["r_bottom", "r_top", "length"])?;
            geometry_value(
                Geometry::Cone {
                    r_bottom: b.num("r_bottom")?,
                    r_top: b.num("r_top")?,
                    length: b.num("length")?,
                },
                span,
            )?
        }
        "capsule" => {
            let b = args.bind(&["radius", "length"])?;
            geometry_value(
                Geometry::Capsule {
                    radius: b.num("radius")?,
                    length: b.num("length")?,
                },
                span,
            )?
        }
        "wheel" => {
            let b = args.bind(&[
                "radius",
                "width",
                "spokes",
                "bore",
                "hub_radius",
                "rim_thickness",
                "spoke_width",
            ])?;
            let mut p = WheelParams::new(
                b.num("radius")?,
                b.num("width")?,
                b.opt_count("spokes")?.unwrap_or(6),
                b.opt_num("bore")?.unwrap_or(0.0),
            );
            if let Some(v) = b.opt_num("hub_radius")? {
                p.hub_radius = v;
            }
            if let Some(v) = b.opt_num("rim_thickness")? {
                p.rim_thickness = v;
            }
            if let Some(v) = b.opt_num("spoke_width")? {
                p.spoke_width = v;
            }
            procedural(ProceduralSpec::Wheel(p), span)?
        }
        "barrel_hinge" => {
            let b = args.bind(&["length", "barrel_radius", "leaf_width", "leaf_thickness", "piece"])?;
            procedural(
                ProceduralSpec::BarrelHinge {
                    params: HingeParams {
                        length: b.num("length")?,
                        barrel_radius: b.num("barrel_radius")?,
                        leaf_width: b.num("leaf_width")?,
                        leaf_thickness: b.num("leaf_thickness")?,
                    },
                    piece: b.opt_str("piece")?,
                },
                span,
            )?
        }
        "perforated_panel" => {
            let b = args.bind(&["size", "holes_x", "holes_y", "hole_radius"])?;
            procedural(
                ProceduralSpec::PerforatedPanel(PanelParams {
                    size: b.vec3("size")?,
                    holes_x: b.count("holes_x")?,
                    holes_y: b.count("holes_y")?,
                    hole_radius: b.num("hole_radius")?,
                }),
                span,
            )?
        }
        "tube" => {
            let b = args.bind(&["points", "radius"])?;
            let (pts, pspan) = b.require("points")?;
            let points = match pts {
                Value::List(items) => items
                    .iter()
                    .map(|p| {
                        p.as_vec3().ok_or_else(|| {
                            LangError::type_mismatch("tube points must be 3-vectors", *pspan)
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                other => {
                    return Err(LangError::type_mismatch(
                        format!("points must be a list of 3-vectors, got {}", other.type_name()),
                        *pspan,
                    ))
                }
            };
            procedural(
                ProceduralSpec::SweptTube(TubeParams {
                    points,
                    radius: b.num("radius")?,
                }),
                span,
            )?
        }
        "origin" => {
            let b = args.bind(&["xyz", "rpy"])?;
            Value::Origin(Transform::new(
                b.opt_vec3("xyz")?.unwrap_or_else(Vec3::zeros),
                b.opt_vec3("rpy")?.unwrap_or_else(Vec3::zeros),
            ))
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}

pub const GEOMETRY_BUILTINS: [&str; 10] = [
    "box",
    "cylinder",
    "sphere",
    "cone",
    "capsule",
    "wheel",
    "barrel_hinge",
    "perforated_panel",
    "tube",
    "origin",
];

impl Host for BuildHost {
    fn call(&mut self, name: &str, args: Args, _ctx: &CallCtx) -> Result<Option<Value>, LangError> {
        let span = args.span;
        let v = match name {
            "object" => {
                let b = args.bind(&["name"])?;
                let n = b.str("name")?;
                if self.obj.is_some() {
                    return Err(LangError::runtime(
                        "object() must be called once, before any other construction",
                        span,
                    ));
                }
                self.obj = Some(ArticulatedObject::new(&n).map_err(|e| model_err(e, span))?);
                Value::Unit
            }
            "part" => {
                let b = args.bind(&["name"])?;
                let n = b.str("name")?;
                self.obj().add_part(&n).map_err(|e| model_err(e, span))?;
                Value::Part(n)
            }
            "material" => {
                let b = args.bind(&["name", "rgba"])?;
                let n = b.str("name")?;
                let (v, vspan) = b.require("rgba")?;
                let rgba = rgba_of(v, *vspan)?;
                self.obj().add_material(&n, rgba).map_err(|e| model_err(e, span))?;
                Value::Material(n)
            }
            "visual" => {
                let b = args.bind(&["part", "geometry", "origin", "material", "rgba", "name"])?;
                self.visual(b)?
            }
            "inertial" => {
                let b = args.bind(&["part", "geometry", "mass", "origin"])?;
                let part = self.part_id(&b, "part")?;
                let g = geometry_arg(&b, "geometry")?;
                let mass = b.num("mass")?;
                let origin = origin_arg(&b, "origin")?;
                self.obj()
                    .set_inertial(part, &g, mass, origin)
                    .map_err(|e| model_err(e, span))?;
                Value::Unit
            }
            "joint" => {
                let b = args.bind(&[
                    "name", "type", "parent", "child", "origin", "axis", "lower", "upper", "effort",
                    "velocity", "limits", "mimic",
                ])?;
                self.joint(b)?
            }
            "limits" => {
                let b = args.bind(&["lower", "upper", "effort", "velocity"])?;
                Value::Limits(LimitsValue {
                    lower: b.num("lower")?,
                    upper: b.num("upper")?,
                    effort: b.opt_num("effort")?,
                    velocity: b.opt_num("velocity")?,
                })
            }
            "mimic" => {
                let b = args.bind(&["joint", "multiplier", "offset"])?;
                Value::Mimic(Mimic {
                    joint: b.name("joint")?,
                    multiplier: b.opt_num("multiplier")?.unwrap_or(1.0),
                    offset: b.opt_num("offset")?.unwrap_or(0.0),
                })
            }
            _ => return geometry_builtin(name, args),
        };
        Ok(Some(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn build(src: &str) -> Result<BuildOutput, LangError> {
        evaluate_build(&parse_program(src).unwrap())
    }

    #[test]
    fn repeat_names_parts() {
        let out = build("build { repeat i in 0..3 { part(\"key_\" + str(i)); } }").unwrap();
        let names: Vec<_> = out.object.parts().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["key_0", "key_1", "key_2"]);
        assert_eq!(out.object.name(), DEFAULT_OBJECT_NAME);
    }

    #[test]
    fn zero_and_oversized_loops() {
        assert!(build("build { repeat i in 0..0 { part(\"p\"); } }")
            .unwrap()
            .object
            .parts()
            .is_empty());
        assert_eq!(
            build("build { repeat i in 0..257 { } }").unwrap_err().code,
            "loop_bound_exceeded"
        );
    }

    #[test]
    fn division_by_zero_is_located() {
        let e = build("build {\n  let r = 1/0;\n}").unwrap_err();
        assert_eq!(e.code, "division_by_zero");
        assert_eq!(e.span.line, 2);
    }

    #[test]
    fn model_errors_carry_location() {
        let e = build("build {\n part(\"a\");\n part(\"a\");\n}").unwrap_err();
        assert_eq!(e.code, "runtime_error");
        assert!(e.message.contains("duplicate_part_name"));
        assert_eq!(e.span.line, 3);
    }

    #[test]
    fn joint_defaults_are_noted() {
        let out = build(
            r#"build {
                object("hinge_demo");
                let a = part("a");
                let b = part("b");
                joint("h", "revolute", parent=a, child=b, axis=[0, 0, 1], lower=0, upper=1);
            }"#,
        )
        .unwrap();
        let j = out.object.joint("h").unwrap();
        assert_eq!(j.limits.unwrap().effort, DEFAULT_EFFORT);
        assert_eq!(out.notes.len(), 1);
        assert!(out.notes[0].message.contains("effort defaulted to 10"));
    }

    #[test]
    fn continuous_with_position_limits_rejected() {
        let e = build(
            r#"build {
                part("a"); part("b");
                joint("spin", "continuous", parent="a", child="b", axis=[0,0,1], lower=-1, upper=1);
            }"#,
        )
        .unwrap_err();
        assert!(e.message.contains("limits_forbidden"), "{}", e.message);
    }

    #[test]
    fn type_mismatch_on_vector_for_scalar() {
        let e = build("build { let g = sphere([1, 2, 3]); }").unwrap_err();
        assert_eq!(e.code, "type_mismatch");
    }

    #[test]
    fn lets_are_exported() {
        let out = build("build { let h = 0.5; repeat i in 0..2 { let inner = i; } }").unwrap();
        assert!(out.env.contains_key("h"));
        assert!(!out.env.contains_key("inner"));
    }
}
