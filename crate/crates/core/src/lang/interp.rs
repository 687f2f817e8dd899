//! Expression evaluation shared by build, tests and probe scopes. Each scope
//! supplies a [`Host`] for its own builtins; math helpers are common.

use std::collections::BTreeMap;

use super::ast::{BinOp, Expr, ExprKind, UnOp};
use super::value::{format_number, Binding, Env, Value};
use super::{LangError, Span};
use crate::kinematics::PoseConfig;
use crate::math::Vec3;

pub struct CallCtx<'a> {
    pub pose: &'a PoseConfig,
    pub span: Span,
}

pub trait Host {
    /// `Ok(None)` when `name` is not one of this host's builtins.
    fn call(&mut self, name: &str, args: Args, ctx: &CallCtx) -> Result<Option<Value>, LangError>;
}

/// Evaluated call arguments.
pub struct Args {
    pub fname: String,
    pub positional: Vec<(Value, Span)>,
    pub named: Vec<(String, Value, Span)>,
    pub span: Span,
}

impl Args {
    /// Matches positional arguments to `params` in order, then named ones by
    /// name. Unknown or repeated parameters are errors.
    pub fn bind(self, params: &[&str]) -> Result<Bound, LangError> {
        if self.positional.len() > params.len() {
            return Err(LangError::runtime(
                format!(
                    "{}() takes at most {} arguments, got {}",
                    self.fname,
                    params.len(),
                    self.positional.len()
                ),
                self.span,
            ));
        }
        let mut slots: Vec<Option<(Value, Span)>> = vec![None; params.len()];
        for (i, a) in self.positional.into_iter().enumerate() {
            slots[i] = Some(a);
        }
        for (name, v, span) in self.named {
            let Some(i) = params.iter().position(|p| *p == name) else {
                return Err(LangError::runtime(
                    format!("{}() has no parameter '{name}'", self.fname),
                    span,
                ));
            };
            if slots[i].is_some() {
                return Err(LangError::runtime(
                    format!("{}() got '{name}' more than once", self.fname),
                    span,
                ));
            }
            slots[i] = Some((v, span));
        }
        Ok(Bound {
            fname: self.fname,
            span: self.span,
            params: params.iter().map(|s| s.to_string()).collect(),
            slots,
        })
    }
}

pub struct Bound {
    pub fname: String,
    pub span: Span,
    params: Vec<String>,
    slots: Vec<Option<(Value, Span)>>,
}

impl Bound {
    fn index(&self, name: &str) -> usize {
        self.params
            .iter()
            .position(|p| p == name)
            .unwrap_or_else(|| panic!("{}() binds no parameter {name}", self.fname))
    }

    pub fn get(&self, name: &str) -> Option<&(Value, Span)> {
        self.slots[self.index(name)].as_ref()
    }

    pub fn span_of(&self, name: &str) -> Span {
        self.get(name).map(|(_, s)| *s).unwrap_or(self.span)
    }

    pub fn require(&self, name: &str) -> Result<&(Value, Span), LangError> {
        self.get(name).ok_or_else(|| {
            LangError::runtime(
                format!("{}() is missing argument '{name}'", self.fname),
                self.span,
            )
        })
    }

    fn mismatch(&self, name: &str, want: &str, got: &Value, span: Span) -> LangError {
        LangError::type_mismatch(
            format!(
                "{}() argument '{name}' must be a {want}, got {}",
                self.fname,
                got.type_name()
            ),
            span,
        )
    }

    pub fn num(&self, name: &str) -> Result<f64, LangError> {
        let (v, span) = self.require(name)?;
        match v {
            Value::Num(n) => Ok(*n),
            other => Err(self.mismatch(name, "number", other, *span)),
        }
    }

    pub fn opt_num(&self, name: &str) -> Result<Option<f64>, LangError> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.num(name).map(Some),
        }
    }

    pub fn count(&self, name: &str) -> Result<u32, LangError> {
        let n = self.num(name)?;
        if n.fract() != 0.0 || !(0.0..=1e6).contains(&n) {
            return Err(LangError::runtime(
                format!("{}() argument '{name}' must be a non-negative integer", self.fname),
                self.span_of(name),
            ));
        }
        Ok(n as u32)
    }

    pub fn opt_count(&self, name: &str) -> Result<Option<u32>, LangError> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.count(name).map(Some),
        }
    }

    pub fn str(&self, name: &str) -> Result<String, LangError> {
        let (v, span) = self.require(name)?;
        match v {
            Value::Str(s) => Ok(s.clone()),
            other => Err(self.mismatch(name, "string", other, *span)),
        }
    }

    pub fn opt_str(&self, name: &str) -> Result<Option<String>, LangError> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.str(name).map(Some),
        }
    }

    /// A string or any named handle.
    pub fn name(&self, name: &str) -> Result<String, LangError> {
        let (v, span) = self.require(name)?;
        v.as_name()
            .map(str::to_string)
            .ok_or_else(|| self.mismatch(name, "name", v, *span))
    }

    pub fn opt_name(&self, name: &str) -> Result<Option<String>, LangError> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.name(name).map(Some),
        }
    }

    pub fn vec3(&self, name: &str) -> Result<Vec3, LangError> {
        let (v, span) = self.require(name)?;
        v.as_vec3()
            .ok_or_else(|| self.mismatch(name, "3-vector", v, *span))
    }

    pub fn opt_vec3(&self, name: &str) -> Result<Option<Vec3>, LangError> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.vec3(name).map(Some),
        }
    }

    pub fn value(&self, name: &str) -> Option<&Value> {
        self.get(name).map(|(v, _)| v)
    }
}

/// Lexical scopes, innermost last.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    frames: Vec<BTreeMap<String, Binding>>,
}

impl Scope {
    pub fn new() -> Self {
        Self {
            frames: vec![BTreeMap::new()],
        }
    }

    pub fn from_env(env: Env) -> Self {
        Self { frames: vec![env] }
    }

    pub fn push(&mut self) {
        self.frames.push(BTreeMap::new());
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    pub fn set(&mut self, name: &str, b: Binding) {
        self.frames
            .last_mut()
            .expect("scope has a frame")
            .insert(name.to_string(), b);
    }

    pub fn lookup(&self, name: &str) -> Option<&Binding> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    /// Flattened view with inner bindings shadowing outer ones.
    pub fn snapshot(&self) -> Env {
        let mut env = Env::new();
        for f in &self.frames {
            for (k, v) in f {
                env.insert(k.clone(), v.clone());
            }
        }
        env
    }
}

pub const MATH_BUILTINS: [&str; 8] = ["sin", "cos", "sqrt", "abs", "min", "max", "pi", "str"];

pub struct Interp<'h> {
    pub host: &'h mut dyn Host,
    pub steps: u64,
    pub step_limit: u64,
    /// Division by zero yields NaN instead of failing, and `&&`/`||`
    /// evaluate both sides. Used when validating checks against placeholder
    /// measurements.
    pub dry_run: bool,
}

impl<'h> Interp<'h> {
    pub fn new(host: &'h mut dyn Host) -> Self {
        Self {
            host,
            steps: 0,
            step_limit: u64::MAX,
            dry_run: false,
        }
    }

    pub fn eval(&mut self, e: &Expr, scope: &Scope, pose: &PoseConfig) -> Result<Value, LangError> {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(LangError::new(
                "step_budget_exceeded",
                format!("evaluation exceeded {} steps", self.step_limit),
                e.span,
            ));
        }
        match &e.kind {
            ExprKind::Number(n) => Ok(Value::Num(*n)),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Ident(name) => match scope.lookup(name) {
                Some(Binding::Value(v)) => Ok(v.clone()),
                Some(Binding::Deferred(d)) => {
                    let d = d.clone();
                    self.eval(&d.expr, &Scope::from_env(d.env.clone()), &d.pose)
                }
                None => match name.as_str() {
                    "pi" => Ok(Value::Num(std::f64::consts::PI)),
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => Err(LangError::new(
                        "undefined_identifier",
                        format!("'{name}' is not defined"),
                        e.span,
                    )),
                },
            },
            ExprKind::List(items) => Ok(Value::List(
                items
                    .iter()
                    .map(|i| self.eval(i, scope, pose))
                    .collect::<Result<_, _>>()?,
            )),
            ExprKind::Map(entries) => {
                let mut m = BTreeMap::new();
                for (k, v) in entries {
                    m.insert(k.clone(), self.eval(v, scope, pose)?);
                }
                Ok(Value::Map(m))
            }
            ExprKind::Unary(op, inner) => {
                let v = self.eval(inner, scope, pose)?;
                match (op, v) {
                    (UnOp::Neg, Value::Num(n)) => Ok(Value::Num(-n)),
                    (UnOp::Neg, v @ Value::List(_)) => map_list(&v, e.span, |x| Ok(-x)),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (op, v) => Err(LangError::type_mismatch(
                        format!(
                            "cannot apply '{}' to a {}",
                            if *op == UnOp::Neg { "-" } else { "!" },
                            v.type_name()
                        ),
                        e.span,
                    )),
                }
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let l = self.eval(lhs, scope, pose)?;
                if !self.dry_run {
                    match (op, &l) {
                        (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                        (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                        _ => {}
                    }
                }
                let r = self.eval(rhs, scope, pose)?;
                self.binary(*op, l, r, e.span)
            }
            ExprKind::Index(base, idx) => {
                let b = self.eval(base, scope, pose)?;
                let i = self.eval(idx, scope, pose)?;
                index(&b, &i, e.span)
            }
            ExprKind::Call(call) => {
                let mut args = Args {
                    fname: call.name.clone(),
                    positional: Vec::new(),
                    named: Vec::new(),
                    span: call.span,
                };
                for a in &call.args {
                    let v = self.eval(&a.value, scope, pose)?;
                    match &a.name {
                        Some(n) => args.named.push((n.clone(), v, a.span)),
                        None => args.positional.push((v, a.span)),
                    }
                }
                let ctx = CallCtx {
                    pose,
                    span: call.span,
                };
                if MATH_BUILTINS.contains(&call.name.as_str()) {
                    return math_builtin(args);
                }
                match self.host.call(&call.name, args, &ctx)? {
                    Some(v) => Ok(v),
                    None => Err(LangError::new(
                        "undefined_identifier",
                        format!("unknown function '{}'", call.name),
                        call.span,
                    )),
                }
            }
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value, span: Span) -> Result<Value, LangError> {
        use Value::*;
        let mismatch = |l: &Value, r: &Value| {
            LangError::type_mismatch(
                format!(
                    "cannot apply '{}' to {} and {}",
                    op.symbol(),
                    l.type_name(),
                    r.type_name()
                ),
                span,
            )
        };
        match op {
            BinOp::And | BinOp::Or => match (&l, &r) {
                (Bool(a), Bool(b)) => Ok(Bool(if op == BinOp::And { *a && *b } else { *a || *b })),
                _ => Err(mismatch(&l, &r)),
            },
            BinOp::Eq => Ok(Bool(l == r)),
            BinOp::Ne => Ok(Bool(l != r)),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match (&l, &r) {
                (Num(a), Num(b)) => Ok(Bool(match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    _ => a >= b,
                })),
                _ => Err(mismatch(&l, &r)),
            },
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let arith = |a: f64, b: f64| -> Result<f64, LangError> {
                    match op {
                        BinOp::Add => Ok(a + b),
                        BinOp::Sub => Ok(a - b),
                        BinOp::Mul => Ok(a * b),
                        _ if b == 0.0 && !self.dry_run => {
                            Err(LangError::new("division_by_zero", "division by zero", span))
                        }
                        _ if b == 0.0 => Ok(f64::NAN),
                        _ => Ok(a / b),
                    }
                };
                match (&l, &r) {
                    (Num(a), Num(b)) => Ok(Num(arith(*a, *b)?)),
                    (Str(a), Str(b)) if op == BinOp::Add => Ok(Str(format!("{a}{b}"))),
                    (List(a), List(b)) if matches!(op, BinOp::Add | BinOp::Sub) => {
                        if a.len() != b.len() {
                            return Err(LangError::type_mismatch(
                                format!("list lengths differ ({} vs {})", a.len(), b.len()),
                                span,
                            ));
                        }
                        a.iter()
                            .zip(b)
                            .map(|(x, y)| match (x, y) {
                                (Num(x), Num(y)) => arith(*x, *y).map(Num),
                                _ => Err(mismatch(x, y)),
                            })
                            .collect::<Result<_, _>>()
                            .map(List)
                    }
                    (List(_), Num(b)) if matches!(op, BinOp::Mul | BinOp::Div) => {
                        map_list(&l, span, |x| arith(x, *b))
                    }
                    (Num(a), List(_)) if op == BinOp::Mul => map_list(&r, span, |x| arith(*a, x)),
                    _ => Err(mismatch(&l, &r)),
                }
            }
        }
    }
}

fn map_list(v: &Value, span: Span, f: impl Fn(f64) -> Result<f64, LangError>) -> Result<Value, LangError> {
    let Value::List(items) = v else {
        unreachable!("map_list on a list");
    };
    items
        .iter()
        .map(|x| match x {
            Value::Num(n) => f(*n).map(Value::Num),
            other => Err(LangError::type_mismatch(
                format!("expected a list of numbers, found a {}", other.type_name()),
                span,
            )),
        })
        .collect::<Result<_, _>>()
        .map(Value::List)
}

fn index(base: &Value, idx: &Value, span: Span) -> Result<Value, LangError> {
    match (base, idx) {
        (Value::List(items), Value::Num(n)) => {
            if n.fract() != 0.0 || *n < 0.0 || *n as usize >= items.len() {
                return Err(LangError::runtime(
                    format!("index {n} out of range for a list of {}", items.len()),
                    span,
                ));
            }
            Ok(items[*n as usize].clone())
        }
        (Value::Map(m), Value::Str(k)) => m
            .get(k)
            .cloned()
            .ok_or_else(|| LangError::runtime(format!("map has no key '{k}'"), span)),
        (b, i) => Err(LangError::type_mismatch(
            format!("cannot index a {} with a {}", b.type_name(), i.type_name()),
            span,
        )),
    }
}

fn math_builtin(args: Args) -> Result<Value, LangError> {
    let span = args.span;
    let name = args.fname.clone();
    match name.as_str() {
        "pi" => {
            args.bind(&[])?;
            Ok(Value::Num(std::f64::consts::PI))
        }
        "sin" | "cos" | "sqrt" | "abs" => {
            let b = args.bind(&["x"])?;
            let x = b.num("x")?;
            Ok(Value::Num(match name.as_str() {
                "sin" => x.sin(),
                "cos" => x.cos(),
                "abs" => x.abs(),
                _ if x < 0.0 => {
                    return Err(LangError::runtime(format!("sqrt of negative number {x}"), span))
                }
                _ => x.sqrt(),
            }))
        }
        "min" | "max" => {
            if !args.named.is_empty() {
                return Err(LangError::runtime(format!("{name}() takes no named arguments"), span));
            }
            let mut nums = Vec::new();
            let items: Vec<Value> = match args.positional.as_slice() {
                [(Value::List(items), _)] => items.clone(),
                other => other.iter().map(|(v, _)| v.clone()).collect(),
            };
            for v in items {
                match v {
                    Value::Num(n) => nums.push(n),
                    other => {
                        return Err(LangError::type_mismatch(
                            format!("{name}() expects numbers, got a {}", other.type_name()),
                            span,
                        ))
                    }
                }
            }
            if nums.is_empty() {
                return Err(LangError::runtime(format!("{name}() needs at least one number"), span));
            }
            let pick = if name == "min" { f64::min } else { f64::max };
            Ok(Value::Num(nums.into_iter().reduce(pick).expect("non-empty")))
        }
        "str" => {
            let b = args.bind(&["value"])?;
            let (v, vspan) = b.require("value")?;
            match v {
                Value::Num(n) => Ok(Value::Str(format_number(*n))),
                Value::Str(s) => Ok(Value::Str(s.clone())),
                Value::Bool(x) => Ok(Value::Str(x.to_string())),
                other => v
                    .as_name()
                    .map(|s| Value::Str(s.to_string()))
                    .ok_or_else(|| {
                        LangError::type_mismatch(
                            format!("str() cannot convert a {}", other.type_name()),
                            *vspan,
                        )
                    }),
            }
        }
        _ => unreachable!("not a math builtin"),
    }
}
