//! Geometric measurements shared by authored checks and probes.

use std::collections::{BTreeMap, HashMap};

use crate::geometry::{GeometryError, TriMesh};
use crate::kinematics::{KinematicTree, PoseConfig};
use crate::lang::interp::{Args, Bound, CallCtx, Host};
use crate::lang::{LangError, Span, Value};
use crate::math::Vec3;
use crate::model::ArticulatedObject;

use super::scene::{body_distance, LocalMeshes, Scene};

fn pose_key(pose: &PoseConfig) -> String {
    pose.iter()
        .map(|(k, v)| format!("{k}={:016x}", v.to_bits()))
        .collect::<Vec<_>>()
        .join(",")
}

/// Poses scenes on demand and caches them by joint configuration.
pub struct SceneCache<'a> {
    pub obj: &'a ArticulatedObject,
    pub tree: &'a KinematicTree,
    pub meshes: &'a LocalMeshes,
    scenes: HashMap<String, Scene>,
    /// Joints clamped while posing, in first-seen order.
    pub clamped: Vec<crate::kinematics::ClampNote>,
}

impl<'a> SceneCache<'a> {
    pub fn new(obj: &'a ArticulatedObject, tree: &'a KinematicTree, meshes: &'a LocalMeshes) -> Self {
        Self {
            obj,
            tree,
            meshes,
            scenes: HashMap::new(),
            clamped: Vec::new(),
        }
    }

    pub fn scene(&mut self, pose: &PoseConfig, span: Span) -> Result<&Scene, LangError> {
        let key = pose_key(pose);
        if !self.scenes.contains_key(&key) {
            let frames = self
                .tree
                .forward_kinematics(pose)
                .map_err(|e| LangError::new(e.code(), e.to_string(), span))?;
            for c in &frames.clamped {
                if !self.clamped.contains(c) {
                    self.clamped.push(c.clone());
                }
            }
            self.scenes.insert(key.clone(), self.meshes.pose(&frames));
        }
        Ok(&self.scenes[&key])
    }
}

fn geometry_error(e: GeometryError, span: Span) -> LangError {
    LangError::new(e.code(), e.to_string(), span)
}

fn vec_value(v: &Vec3) -> Value {
    Value::vec3(*v)
}

/// Host for measurement builtins. With `probe` set it also answers the
/// catalog queries and accepts a `pose=` argument on measurements.
pub struct MeasureHost<'a> {
    pub cache: SceneCache<'a>,
    pub probe: bool,
}

impl<'a> MeasureHost<'a> {
    pub fn new(cache: SceneCache<'a>, probe: bool) -> Self {
        Self { cache, probe }
    }

    fn pose_arg(&self, b: &Bound, ctx: &CallCtx) -> Result<PoseConfig, LangError> {
        let Some((v, span)) = self.probe.then(|| b.get("pose")).flatten() else {
            return Ok(ctx.pose.clone());
        };
        let Value::Map(m) = v else {
            return Err(LangError::type_mismatch(
                format!("pose must be a map, got {}", v.type_name()),
                *span,
            ));
        };
        let mut pose = ctx.pose.clone();
        for (k, v) in m {
            match v {
                Value::Num(q) => {
                    pose.insert(k.clone(), *q);
                }
                other => {
                    return Err(LangError::type_mismatch(
                        format!("pose value for '{k}' must be a number, got {}", other.type_name()),
                        *span,
                    ))
                }
            }
        }
        self.cache
            .tree
            .check_pose(&pose)
            .map_err(|e| LangError::new(e.code(), e.to_string(), *span))?;
        Ok(pose)
    }

    fn params<'p>(&self, base: &'p [&'p str], with_pose: &'p [&'p str]) -> &'p [&'p str] {
        if self.probe {
            with_pose
        } else {
            base
        }
    }

    fn part_name(&self, b: &Bound, param: &str) -> Result<String, LangError> {
        let name = b.name(param)?;
        if self.cache.obj.part_by_name(&name).is_none() {
            return Err(crate::lang::plan::unknown_part(&name, b.span_of(param)));
        }
        Ok(name)
    }

    fn part_mesh<'s>(scene: &'s Scene, name: &str, span: Span) -> Result<&'s TriMesh, LangError> {
        let p = scene.part(name).expect("part checked");
        if p.mesh.is_empty() {
            return Err(LangError::new(
                "empty_mesh",
                format!("part '{name}' has no geometry"),
                span,
            ));
        }
        Ok(&p.mesh)
    }

    fn parts(&self) -> Value {
        Value::List(
            self.cache
                .obj
                .parts()
                .iter()
                .map(|p| {
                    Value::Map(BTreeMap::from([
                        ("name".to_string(), Value::Str(p.name.clone())),
                        ("visual_count".to_string(), Value::Num(p.visuals.len() as f64)),
                        (
                            "visuals".to_string(),
                            Value::List(p.visuals.iter().map(|v| Value::Str(v.name.clone())).collect()),
                        ),
                    ]))
                })
                .collect(),
        )
    }

    fn joints(&self) -> Value {
        Value::List(
            self.cache
                .obj
                .joints()
                .iter()
                .map(|j| {
                    let mut m = BTreeMap::from([
                        ("name".to_string(), Value::Str(j.name.clone())),
                        ("type".to_string(), Value::Str(j.joint_type.as_str().to_string())),
                        ("parent".to_string(), Value::Str(j.parent.clone())),
                        ("child".to_string(), Value::Str(j.child.clone())),
                        ("axis".to_string(), vec_value(&j.axis)),
                    ]);
                    if let Some(l) = &j.limits {
                        m.insert("lower".to_string(), Value::Num(l.lower));
                        m.insert("upper".to_string(), Value::Num(l.upper));
                    }
                    Value::Map(m)
                })
                .collect(),
        )
    }
}

impl Host for MeasureHost<'_> {
    fn call(&mut self, name: &str, args: Args, ctx: &CallCtx) -> Result<Option<Value>, LangError> {
        let span = args.span;
        match name {
            "world_position" => {
                let b = args.bind(self.params(&["part"], &["part", "pose"]))?;
                let part = self.part_name(&b, "part")?;
                let pose = self.pose_arg(&b, ctx)?;
                let scene = self.cache.scene(&pose, span)?;
                Ok(Some(vec_value(&scene.part(&part).expect("part checked").origin)))
            }
            "aabb" => {
                let b = args.bind(self.params(&["part"], &["part", "pose"]))?;
                let part = self.part_name(&b, "part")?;
                let pose = self.pose_arg(&b, ctx)?;
                let scene = self.cache.scene(&pose, span)?;
                let bb = Self::part_mesh(scene, &part, span)?
                    .aabb()
                    .map_err(|e| geometry_error(e, span))?;
                Ok(Some(Value::Map(BTreeMap::from([
                    ("min".to_string(), vec_value(&bb.min)),
                    ("max".to_string(), vec_value(&bb.max)),
                ]))))
            }
            "distance" => {
                let b = args.bind(self.params(&["a", "b"], &["a", "b", "pose"]))?;
                let (pa, pb) = (self.part_name(&b, "a")?, self.part_name(&b, "b")?);
                let pose = self.pose_arg(&b, ctx)?;
                let scene = self.cache.scene(&pose, span)?;
                let (ma, mb) = (Self::part_mesh(scene, &pa, span)?, Self::part_mesh(scene, &pb, span)?);
                let d = body_distance(ma, mb).map_err(|e| geometry_error(e, span))?;
                Ok(Some(Value::Num(d)))
            }
            "volume" if self.probe => {
                let b = args.bind(&["part"])?;
                let part = self.part_name(&b, "part")?;
                let scene = self.cache.scene(&PoseConfig::new(), span)?;
                let p = scene.part(&part).expect("part checked");
                Ok(Some(Value::Num(p.elements.iter().map(|e| e.mesh.volume()).sum())))
            }
            "parts" if self.probe => {
                args.bind(&[])?;
                Ok(Some(self.parts()))
            }
            "joints" if self.probe => {
                args.bind(&[])?;
                Ok(Some(self.joints()))
            }
            "catalog" if self.probe => {
                args.bind(&[])?;
                Ok(Some(catalog()))
            }
            _ => Ok(None),
        }
    }
}

pub const PROBE_BUILTINS: [(&str, &str); 7] = [
    ("aabb", "aabb(part, pose={}) -> {min, max} world bounds"),
    ("catalog", "catalog() -> this listing"),
    ("distance", "distance(a, b, pose={}) -> minimum distance, 0 when touching or nested"),
    ("joints", "joints() -> joint summaries with type, parent, child, axis and limits"),
    ("parts", "parts() -> part summaries with visual names and counts"),
    ("volume", "volume(part) -> enclosed volume of the part's visuals"),
    ("world_position", "world_position(part, pose={}) -> world origin of the part frame"),
];

fn catalog() -> Value {
    Value::List(
        PROBE_BUILTINS
            .iter()
            .map(|(name, sig)| {
                Value::Map(BTreeMap::from([
                    ("name".to_string(), Value::Str(name.to_string())),
                    ("usage".to_string(), Value::Str(sig.to_string())),
                ]))
            })
            .collect(),
    )
}
