//! Extraction of the `tests` block into a declarative [`TestPlan`].
//!
//! Directive arguments are evaluated eagerly. `check` conditions and any
//! `let` that reads a measurement are kept as expressions with the bindings
//! and pose in effect at their declaration, and are evaluated by the test
//! runner against real geometry.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::Arc;

use super::ast::{AssetProgram, Call, Expr, ExprKind, Stmt};
use super::build::{repeat_range, BuildOutput};
use super::interp::{Args, Bound, CallCtx, Host, Interp, Scope};
use super::value::{Binding, Deferred, Env, Value};
use super::{LangError, Span};
use crate::geometry::CONTACT_TOLERANCE;
use crate::kinematics::PoseConfig;
use crate::math::Vec3;
use crate::model::{ArticulatedObject, JointType};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target {
    pub part: String,
    pub element: Option<String>,
}

impl Target {
    pub fn part(name: &str) -> Self {
        Self {
            part: name.to_string(),
            element: None,
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.element {
            Some(e) => write!(f, "{}.{}", self.part, e),
            None => f.write_str(&self.part),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssertionKind {
    Contact { tolerance: f64 },
    Gap { min_gap: f64, max_penetration: f64 },
    Overlap,
    Within,
    Check { expr: Expr, env: Env },
}

impl AssertionKind {
    pub fn name(&self) -> &'static str {
        match self {
            AssertionKind::Contact { .. } => "contact",
            AssertionKind::Gap { .. } => "gap",
            AssertionKind::Overlap => "overlap",
            AssertionKind::Within => "within",
            AssertionKind::Check { .. } => "check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub kind: AssertionKind,
    pub targets: Vec<Target>,
    pub pose: PoseConfig,
    pub label: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllowanceKind {
    Overlap,
    IsolatedPart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allowance {
    pub kind: AllowanceKind,
    pub targets: Vec<Target>,
    pub reason: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Assertion(Assertion),
    Allowance(Allowance),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestPlan {
    pub directives: Vec<Directive>,
}

impl TestPlan {
    pub fn assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.directives.iter().filter_map(|d| match d {
            Directive::Assertion(a) => Some(a),
            _ => None,
        })
    }

    pub fn allowances(&self) -> impl Iterator<Item = &Allowance> {
        self.directives.iter().filter_map(|d| match d {
            Directive::Allowance(a) => Some(a),
            _ => None,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.directives.is_empty()
    }
}

/// Read-only measurement functions usable in `check` and `let`.
pub const MEASUREMENTS: [&str; 3] = ["world_position", "aabb", "distance"];

#[derive(Default)]
struct PlanState {
    directives: Vec<Directive>,
    measured: bool,
    in_pose: bool,
}

struct PlanHost<'o> {
    obj: &'o ArticulatedObject,
    state: Rc<RefCell<PlanState>>,
}

pub fn unknown_part(name: &str, span: Span) -> LangError {
    LangError::new("unknown_part_in_test", format!("no part named '{name}'"), span)
}

impl PlanHost<'_> {
    fn part(&self, b: &Bound, param: &str) -> Result<String, LangError> {
        let name = b.name(param)?;
        if self.obj.part_by_name(&name).is_none() {
            return Err(unknown_part(&name, b.span_of(param)));
        }
        Ok(name)
    }

    fn target(&self, b: &Bound, part: &str, elem: &str) -> Result<Target, LangError> {
        let part = self.part(b, part)?;
        let element = b.opt_name(elem)?;
        if let Some(e) = &element {
            let p = self.obj.part_by_name(&part).expect("checked above");
            if p.visual(e).is_none() {
                return Err(LangError::new(
                    "unknown_part_in_test",
                    format!("part '{part}' has no visual '{e}'"),
                    b.span_of(elem),
                ));
            }
        }
        Ok(Target { part, element })
    }

    fn label(b: &Bound, default: String) -> Result<String, LangError> {
        Ok(b.opt_str("label")?.unwrap_or(default))
    }

    fn reason(b: &Bound) -> Result<String, LangError> {
        match b.opt_str("reason")? {
            Some(r) if !r.trim().is_empty() => Ok(r),
            _ => Err(LangError::new(
                "allowance_missing_reason",
                format!("{}() needs a non-empty reason=", b.fname),
                b.span,
            )),
        }
    }

    fn push_assertion(&self, kind: AssertionKind, targets: Vec<Target>, label: String, ctx: &CallCtx) {
        self.state.borrow_mut().directives.push(Directive::Assertion(Assertion {
            kind,
            targets,
            pose: ctx.pose.clone(),
            label,
            span: ctx.span,
        }));
    }

    fn push_allowance(&self, kind: AllowanceKind, targets: Vec<Target>, reason: String, span: Span) -> Result<(), LangError> {
        if self.state.borrow().in_pose {
            return Err(LangError::runtime(
                "allowances apply to the rest pose and cannot appear inside a pose block",
                span,
            ));
        }
        self.state.borrow_mut().directives.push(Directive::Allowance(Allowance {
            kind,
            targets,
            reason,
            span,
        }));
        Ok(())
    }
}

fn pair_label(kind: &str, a: &Target, b: &Target) -> String {
    format!("{kind}({a}, {b})")
}

impl Host for PlanHost<'_> {
    fn call(&mut self, name: &str, args: Args, ctx: &CallCtx) -> Result<Option<Value>, LangError> {
        match name {
            "expect_contact" => {
                let b = args.bind(&["a", "b", "tol", "elem_a", "elem_b", "label"])?;
                let (ta, tb) = (self.target(&b, "a", "elem_a")?, self.target(&b, "b", "elem_b")?);
                let tolerance = b.opt_num("tol")?.unwrap_or(CONTACT_TOLERANCE);
                let label = Self::label(&b, pair_label("expect_contact", &ta, &tb))?;
                self.push_assertion(AssertionKind::Contact { tolerance }, vec![ta, tb], label, ctx);
            }
            "expect_gap" => {
                let b = args.bind(&["a", "b", "min_gap", "max_penetration", "elem_a", "elem_b", "label"])?;
                let (ta, tb) = (self.target(&b, "a", "elem_a")?, self.target(&b, "b", "elem_b")?);
                let kind = AssertionKind::Gap {
                    min_gap: b.opt_num("min_gap")?.unwrap_or(0.0),
                    max_penetration: b.opt_num("max_penetration")?.unwrap_or(0.0),
                };
                let label = Self::label(&b, pair_label("expect_gap", &ta, &tb))?;
                self.push_assertion(kind, vec![ta, tb], label, ctx);
            }
            "expect_overlap" => {
                let b = args.bind(&["a", "b", "elem_a", "elem_b", "label"])?;
                let (ta, tb) = (self.target(&b, "a", "elem_a")?, self.target(&b, "b", "elem_b")?);
                let label = Self::label(&b, pair_label("expect_overlap", &ta, &tb))?;
                self.push_assertion(AssertionKind::Overlap, vec![ta, tb], label, ctx);
            }
            "expect_within" => {
                let b = args.bind(&["inner", "outer", "elem_inner", "elem_outer", "label"])?;
                let ti = self.target(&b, "inner", "elem_inner")?;
                let to = self.target(&b, "outer", "elem_outer")?;
                let label = Self::label(&b, pair_label("expect_within", &ti, &to))?;
                self.push_assertion(AssertionKind::Within, vec![ti, to], label, ctx);
            }
            "allow_overlap" => {
                let b = args.bind(&["a", "b", "elem_a", "elem_b", "reason"])?;
                let (ta, tb) = (self.target(&b, "a", "elem_a")?, self.target(&b, "b", "elem_b")?);
                let reason = Self::reason(&b)?;
                self.push_allowance(AllowanceKind::Overlap, vec![ta, tb], reason, b.span)?;
            }
            "allow_isolated_part" => {
                let b = args.bind(&["part", "reason"])?;
                let t = Target::part(&self.part(&b, "part")?);
                let reason = Self::reason(&b)?;
                self.push_allowance(AllowanceKind::IsolatedPart, vec![t], reason, b.span)?;
            }
            "check" => {
                return Err(LangError::runtime("check() must be used as a statement", ctx.span));
            }
            "world_position" => {
                let b = args.bind(&["part"])?;
                self.part(&b, "part")?;
                self.state.borrow_mut().measured = true;
                return Ok(Some(Value::vec3(Vec3::zeros())));
            }
            "aabb" => {
                let b = args.bind(&["part"])?;
                self.part(&b, "part")?;
                self.state.borrow_mut().measured = true;
                let zero = Value::vec3(Vec3::zeros());
                return Ok(Some(Value::Map(BTreeMap::from([
                    ("max".to_string(), zero.clone()),
                    ("min".to_string(), zero),
                ]))));
            }
            "distance" => {
                let b = args.bind(&["a", "b"])?;
                self.part(&b, "a")?;
                self.part(&b, "b")?;
                self.state.borrow_mut().measured = true;
                return Ok(Some(Value::Num(0.0)));
            }
            _ => return Ok(None),
        }
        Ok(Some(Value::Unit))
    }
}

pub fn extract_test_plan(program: &AssetProgram, build: &BuildOutput) -> Result<TestPlan, LangError> {
    let Some(tests) = &program.tests else {
        return Ok(TestPlan::default());
    };
    let state = Rc::new(RefCell::new(PlanState::default()));
    let mut host = PlanHost {
        obj: &build.object,
        state: state.clone(),
    };
    let mut scope = Scope::from_env(build.env.clone());
    scope.push();
    {
        let mut ex = Extractor {
            interp: Interp::new(&mut host),
            state: state.clone(),
            obj: &build.object,
        };
        ex.run(&tests.stmts, &mut scope, &PoseConfig::new())?;
    }
    let directives = std::mem::take(&mut state.borrow_mut().directives);
    Ok(TestPlan { directives })
}

struct Extractor<'i, 'o> {
    interp: Interp<'i>,
    state: Rc<RefCell<PlanState>>,
    obj: &'o ArticulatedObject,
}

impl Extractor<'_, '_> {
    /// Evaluates `e`, reporting whether it read a measurement. Errors that
    /// only arise from placeholder measurements are deferred to run time.
    fn eval_tracked(&mut self, e: &Expr, scope: &Scope, pose: &PoseConfig) -> Result<(Value, bool), LangError> {
        let was = std::mem::replace(&mut self.state.borrow_mut().measured, false);
        let mut result = self.interp.eval(e, scope, pose);
        let measured = self.state.borrow().measured;
        if result.is_err() && measured {
            self.interp.dry_run = true;
            result = self.interp.eval(e, scope, pose);
            self.interp.dry_run = false;
        }
        self.state.borrow_mut().measured = was || measured;
        Ok((result?, measured))
    }

    fn eval_static(&mut self, e: &Expr, scope: &Scope, pose: &PoseConfig) -> Result<Value, LangError> {
        let (v, measured) = self.eval_tracked(e, scope, pose)?;
        if measured {
            return Err(LangError::runtime(
                "measurements are only allowed inside check() and let",
                e.span,
            ));
        }
        Ok(v)
    }

    fn run(&mut self, stmts: &[Stmt], scope: &mut Scope, pose: &PoseConfig) -> Result<(), LangError> {
        for stmt in stmts {
            match stmt {
                Stmt::Let { name, value, .. } => {
                    let (v, measured) = self.eval_tracked(value, scope, pose)?;
                    let b = if measured {
                        Binding::Deferred(Arc::new(Deferred {
                            expr: value.clone(),
                            env: scope.snapshot(),
                            pose: pose.clone(),
                        }))
                    } else {
                        Binding::Value(v)
                    };
                    scope.set(name, b);
                }
                Stmt::Call(call) if call.name == "check" => self.check(call, scope, pose)?,
                Stmt::Call(call) => {
                    let e = Expr {
                        kind: ExprKind::Call(call.clone()),
                        span: call.span,
                    };
                    self.eval_static(&e, scope, pose)?;
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
                        let r = self.run(body, scope, pose);
                        scope.pop();
                        r?;
                    }
                }
                Stmt::Pose { bindings, body, .. } => {
                    let mut inner = pose.clone();
                    for bnd in bindings {
                        self.check_pose_joint(&bnd.joint, bnd.span)?;
                        match self.eval_static(&bnd.value, scope, pose)? {
                            Value::Num(q) if q.is_finite() => {
                                inner.insert(bnd.joint.clone(), q);
                            }
                            other => {
                                return Err(LangError::type_mismatch(
                                    format!("pose value must be a number, got {}", other.type_name()),
                                    bnd.value.span,
                                ))
                            }
                        }
                    }
                    let was = std::mem::replace(&mut self.state.borrow_mut().in_pose, true);
                    scope.push();
                    let r = self.run(body, scope, &inner);
                    scope.pop();
                    self.state.borrow_mut().in_pose = was;
                    r?;
                }
            }
        }
        Ok(())
    }

    fn check_pose_joint(&self, joint: &str, span: Span) -> Result<(), LangError> {
        let Some(j) = self.obj.joint(joint) else {
            return Err(LangError::new(
                "unknown_joint_in_pose",
                format!("no joint named '{joint}'"),
                span,
            ));
        };
        if j.joint_type == JointType::Fixed {
            return Err(LangError::new(
                "fixed_joint_in_pose",
                format!("joint '{joint}' is fixed and cannot be posed"),
                span,
            ));
        }
        if j.mimic.is_some() {
            return Err(LangError::new(
                "mimic_set_directly",
                format!("joint '{joint}' mimics another joint and cannot be posed directly"),
                span,
            ));
        }
        Ok(())
    }

    fn check(&mut self, call: &Call, scope: &Scope, pose: &PoseConfig) -> Result<(), LangError> {
        let mut label = None;
        let mut cond = None;
        for (i, a) in call.args.iter().enumerate() {
            match (a.name.as_deref(), i) {
                (Some("label"), _) | (None, 0) => label = Some(&a.value),
                (Some("condition"), _) | (None, 1) => cond = Some(&a.value),
                (Some(other), _) => {
                    return Err(LangError::runtime(format!("check() has no parameter '{other}'"), a.span))
                }
                (None, _) => return Err(LangError::runtime("check() takes 2 arguments", a.span)),
            }
        }
        let (Some(label), Some(cond)) = (label, cond) else {
            return Err(LangError::runtime("check() needs a label and a condition", call.span));
        };
        let label = match self.eval_static(label, scope, pose)? {
            Value::Str(s) => s,
            other => {
                return Err(LangError::type_mismatch(
                    format!("check() label must be a string, got {}", other.type_name()),
                    label.span,
                ))
            }
        };
        let (v, _) = self.eval_tracked(cond, scope, pose)?;
        if !matches!(v, Value::Bool(_)) {
            return Err(LangError::type_mismatch(
                format!("check() condition must be a bool, got {}", v.type_name()),
                cond.span,
            ));
        }
        self.state.borrow_mut().directives.push(Directive::Assertion(Assertion {
            kind: AssertionKind::Check {
                expr: cond.clone(),
                env: scope.snapshot(),
            },
            targets: Vec::new(),
            pose: pose.clone(),
            label,
            span: call.span,
        }));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{evaluate_build, parse_program};

    const BASE: &str = r#"
build {
    object("cart");
    let body = part("body");
    visual(body, box([0.4, 0.2, 0.1]), name="chassis");
    visual(body, cylinder(0.01, 0.05), name="axle_stub_0");
    part("wheel_0");
    visual("wheel_0", cylinder(0.05, 0.02), name="rim");
    joint("spin", "continuous", parent=body, child="wheel_0", axis=[0, 1, 0]);
}
"#;

    fn plan(tests: &str) -> Result<TestPlan, LangError> {
        let prog = parse_program(&format!("{BASE}\ntests {{\n{tests}\n}}")).unwrap();
        let out = evaluate_build(&prog).unwrap();
        extract_test_plan(&prog, &out)
    }

    #[test]
    fn empty_tests_give_empty_plan() {
        assert!(plan("").unwrap().is_empty());
    }

    #[test]
    fn element_scoped_allowance() {
        let p = plan(
            r#"allow_overlap("body", "wheel_0", elem_a="axle_stub_0", elem_b="rim", reason="axle stub is intentionally captured");"#,
        )
        .unwrap();
        let a: Vec<_> = p.allowances().collect();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].targets[0].element.as_deref(), Some("axle_stub_0"));
    }

    #[test]
    fn resolution_errors() {
        assert_eq!(
            plan(r#"expect_within("drawer", "body");"#).unwrap_err().code,
            "unknown_part_in_test"
        );
        assert_eq!(
            plan(r#"pose {nope: 1} { }"#).unwrap_err().code,
            "unknown_joint_in_pose"
        );
        assert_eq!(
            plan(r#"allow_isolated_part("wheel_0", reason="  ");"#).unwrap_err().code,
            "allowance_missing_reason"
        );
        assert_eq!(
            plan(r#"allow_isolated_part("wheel_0");"#).unwrap_err().code,
            "allowance_missing_reason"
        );
    }

    #[test]
    fn pose_blocks_capture_bindings() {
        let p = plan(
            r#"
            let rest_z = world_position("wheel_0")[2];
            pose {spin: 0.5} {
                check("spun", world_position("wheel_0")[2] > rest_z - 1);
                expect_contact(body, "wheel_0");
            }
            expect_gap("body", "wheel_0", min_gap=0.0);
            "#,
        )
        .unwrap();
        let asserts: Vec<_> = p.assertions().collect();
        assert_eq!(asserts.len(), 3);
        assert_eq!(asserts[0].pose.get("spin"), Some(&0.5));
        assert_eq!(asserts[1].pose.get("spin"), Some(&0.5));
        assert!(asserts[2].pose.is_empty());
        match &asserts[0].kind {
            AssertionKind::Check { env, .. } => {
                assert!(matches!(env.get("rest_z"), Some(Binding::Deferred(d)) if d.pose.is_empty()))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn measurement_division_is_deferred() {
        let p = plan(r#"let r = 1 / distance("body", "wheel_0"); check("finite", r > 0);"#);
        assert!(p.is_ok());
        assert!(plan("let r = 1 / 0;").is_err());
    }

    #[test]
    fn check_condition_must_be_bool() {
        assert_eq!(plan(r#"check("x", 1 + 1);"#).unwrap_err().code, "type_mismatch");
    }

    #[test]
    fn extraction_is_deterministic() {
        let src = r#"repeat i in 0..3 { expect_contact("body", "wheel_0", label="c" + str(i)); }"#;
        assert_eq!(plan(src).unwrap(), plan(src).unwrap());
    }
}
