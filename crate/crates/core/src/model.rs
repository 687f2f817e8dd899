//! Articulated-object data model: parts, visual elements, materials,
//! inertials and joints.
//!
//! Construction goes through [`ArticulatedObject`] methods, which enforce the
//! local invariants (unique names, positive dimensions, joint/limit
//! consistency). Whole-object invariants such as the single grounded root are
//! checked by [`ArticulatedObject::validate`] once construction is finished.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::procedural::ProceduralGeometry;
use crate::geometry::{self, GeometryError};
use crate::math::{Mat3, Transform, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid name {0:?}: names must be non-empty identifiers without whitespace")]
    InvalidName(String),
    #[error("part {0:?} already exists")]
    DuplicatePartName(String),
    #[error("visual {visual:?} already exists on part {part:?}")]
    DuplicateVisualName { part: String, visual: String },
    #[error("joint {0:?} already exists")]
    DuplicateJointName(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("unknown part {0:?}")]
    UnknownPart(String),
    #[error("joint {0:?} connects a part to itself")]
    SelfJoint(String),
    #[error("joint {0:?} of type {1} requires motion limits")]
    LimitsRequired(String, JointType),
    #[error("joint {0:?} of type {1} must not carry position limits")]
    LimitsForbidden(String, JointType),
    #[error("joint {0:?} has invalid limits: {1}")]
    InvalidLimits(String, String),
    #[error("joint {0:?} has a zero-length axis")]
    ZeroAxis(String),
    #[error("material {0:?} was registered with a different color")]
    MaterialConflict(String),
    #[error("unknown material {0:?}")]
    UnknownMaterial(String),
    #[error("mimic source {source_joint:?} of joint {joint:?} is missing or fixed")]
    InvalidMimic { joint: String, source_joint: String },
    #[error("object has no root part")]
    NoRoot,
    #[error("object has multiple root parts: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("part {0:?} is the child of more than one joint")]
    MultipleParents(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidName(_) => "invalid_name",
            ModelError::DuplicatePartName(_) => "duplicate_part_name",
            ModelError::DuplicateVisualName { .. } => "duplicate_visual_name",
            ModelError::DuplicateJointName(_) => "duplicate_joint_name",
            ModelError::InvalidGeometry(_) => "invalid_geometry",
            ModelError::InvalidMass(_) => "invalid_mass",
            ModelError::UnknownPart(_) => "unknown_part",
            ModelError::SelfJoint(_) => "self_joint",
            ModelError::LimitsRequired(..) => "limits_required",
            ModelError::LimitsForbidden(..) => "limits_forbidden",
            ModelError::InvalidLimits(..) => "invalid_limits",
            ModelError::ZeroAxis(_) => "zero_axis",
            ModelError::MaterialConflict(_) => "material_conflict",
            ModelError::UnknownMaterial(_) => "unknown_material",
            ModelError::InvalidMimic { .. } => "invalid_mimic",
            ModelError::NoRoot => "no_root",
            ModelError::MultipleRoots(_) => "multiple_roots",
            ModelError::MultipleParents(_) => "multiple_parents",
        }
    }
}

impl From<GeometryError> for ModelError {
    fn from(e: GeometryError) -> Self {
        ModelError::InvalidGeometry(e.to_string())
    }
}

/// Identifier lexical rule: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_name(name: &str) -> Result<(), ModelError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(ModelError::InvalidName(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgba(pub [f64; 4]);

impl Rgba {
    pub fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Rgba([r, g, b, a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Box { size: Vec3 },
    Cylinder { radius: f64, length: f64 },
    Sphere { radius: f64 },
    Cone { r_bottom: f64, r_top: f64, length: f64 },
    Capsule { radius: f64, length: f64 },
    Procedural(ProceduralGeometry),
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Box { .. } => "box",
            Geometry::Cylinder { .. } => "cylinder",
            Geometry::Sphere { .. } => "sphere",
            Geometry::Cone { .. } => "cone",
            Geometry::Capsule { .. } => "capsule",
            Geometry::Procedural(p) => p.spec.kind(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn pos(what: &str, v: f64) -> Result<(), ModelError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidGeometry(format!("{what} must be positive, got {v}")))
            }
        }
        match self {
            Geometry::Box { size } => {
                pos("box size x", size.x)?;
                pos("box size y", size.y)?;
                pos("box size z", size.z)
            }
            Geometry::Cylinder { radius, length } | Geometry::Capsule { radius, length } => {
                pos("radius", *radius)?;
                pos("length", *length)
            }
            Geometry::Sphere { radius } => pos("radius", *radius),
            Geometry::Cone {
                r_bottom,
                r_top,
                length,
            } => {
                pos("length", *length)?;
                for (what, r) in [("r_bottom", r_bottom), ("r_top", r_top)] {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(ModelError::InvalidGeometry(format!(
                            "{what} must be non-negative, got {r}"
                        )));
                    }
                }
                if *r_bottom == 0.0 && *r_top == 0.0 {
                    return Err(ModelError::InvalidGeometry(
                        "cone radii must not both be zero".into(),
                    ));
                }
                Ok(())
            }
            Geometry::Procedural(p) => p.spec.validate().map_err(ModelError::from),
        }
    }

    /// Whether URDF has a native element for this geometry.
    pub fn is_urdf_primitive(&self) -> bool {
        matches!(
            self,
            Geometry::Box { .. } | Geometry::Cylinder { .. } | Geometry::Sphere { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualElement {
    pub name: String,
    pub geometry: Geometry,
    pub origin: Transform,
    pub material: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inertial {
    pub mass: f64,
    /// Center of mass in the part frame.
    pub center: Vec3,
    /// Tensor about the center of mass, axes of the part frame.
    pub inertia: Mat3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub visuals: Vec<VisualElement>,
    pub inertial: Option<Inertial>,
}

impl Part {
    pub fn visual(&self, name: &str) -> Option<&VisualElement> {
        self.visuals.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Revolute,
    Prismatic,
    Continuous,
    Fixed,
}

impl JointType {
    pub fn as_str(&self) -> &'static str {
        match self {
            JointType::Revolute => "revolute",
            JointType::Prismatic => "prismatic",
            JointType::Continuous => "continuous",
            JointType::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "revolute" => Some(JointType::Revolute),
            "prismatic" => Some(JointType::Prismatic),
            "continuous" => Some(JointType::Continuous),
            "fixed" => Some(JointType::Fixed),
            _ => None,
        }
    }

    pub fn requires_limits(&self) -> bool {
        matches!(self, JointType::Revolute | JointType::Prismatic)
    }
}

impl std::fmt::Display for JointType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub lower: f64,
    pub upper: f64,
    pub effort: f64,
    pub velocity: f64,
}

impl MotionLimits {
    pub fn new(lower: f64, upper: f64, effort: f64, velocity: f64) -> Self {
        Self {
            lower,
            upper,
            effort,
            velocity,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err("position limits must be finite".into());
        }
        if self.lower > self.upper {
            return Err(format!("lower {} exceeds upper {}", self.lower, self.upper));
        }
        if !(self.effort.is_finite() && self.effort >= 0.0) {
            return Err(format!("effort must be non-negative, got {}", self.effort));
        }
        if !(self.velocity.is_finite() && self.velocity >= 0.0) {
            return Err(format!("velocity must be non-negative, got {}", self.velocity));
        }
        Ok(())
    }
}

/// Effort/velocity bounds for continuous joints, which have no position range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionProperties {
    pub effort: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mimic {
    pub joint: String,
    pub multiplier: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Articulation {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub origin: Transform,
    /// Unit length.
    pub axis: Vec3,
    pub limits: Option<MotionLimits>,
    pub properties: Option<MotionProperties>,
    pub mimic: Option<Mimic>,
}

/// Arguments for [`ArticulatedObject::add_articulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    pub origin: Transform,
    pub axis: Vec3,
    pub limits: Option<MotionLimits>,
    pub properties: Option<MotionProperties>,
    pub mimic: Option<Mimic>,
}

impl JointSpec {
    pub fn new(
        name: &str,
        joint_type: JointType,
        parent: &str,
        child: &str,
        origin: Transform,
        axis: Vec3,
    ) -> Self {
        Self {
            name: name.to_string(),
            joint_type,
            parent: parent.to_string(),
            child: child.to_string(),
            origin,
            axis,
            limits: None,
            properties: None,
            mimic: None,
        }
    }

    pub fn with_limits(mut self, limits: MotionLimits) -> Self {
        self.limits = Some(limits);
        self
    }

    pub fn with_mimic(mut self, joint: &str, multiplier: f64, offset: f64) -> Self {
        self.mimic = Some(Mimic {
            joint: joint.to_string(),
            multiplier,
            offset,
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulatedObject {
    name: String,
    parts: Vec<Part>,
    joints: Vec<Articulation>,
    materials: BTreeMap<String, Rgba>,
}

const AXIS_EPS: f64 = 1e-9;

impl ArticulatedObject {
    pub fn new(name: &str) -> Result<Self, ModelError> {
        check_name(name)?;
        Ok(Self {
            name: name.to_string(),
            parts: Vec::new(),
            joints: Vec::new(),
            materials: BTreeMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn joints(&self) -> &[Articulation] {
        &self.joints
    }

    pub fn materials(&self) -> &BTreeMap<String, Rgba> {
        &self.materials
    }

    pub fn part(&self, id: PartId) -> &Part {
        &self.parts[id.0]
    }

    pub fn part_id(&self, name: &str) -> Option<PartId> {
        self.parts.iter().position(|p| p.name == name).map(PartId)
    }

    pub fn part_by_name(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&Articulation> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn add_part(&mut self, name: &str) -> Result<PartId, ModelError> {
        check_name(name)?;
        if self.part_id(name).is_some() {
            return Err(ModelError::DuplicatePartName(name.to_string()));
        }
        self.parts.push(Part {
            name: name.to_string(),
            visuals: Vec::new(),
            inertial: None,
        });
        Ok(PartId(self.parts.len() - 1))
    }

    /// Registers a material explicitly. Re-registering the same color is a no-op.
    pub fn add_material(&mut self, name: &str, rgba: Rgba) -> Result<(), ModelError> {
        check_name(name)?;
        match self.materials.get(name) {
            Some(existing) if *existing != rgba => Err(ModelError::MaterialConflict(name.into())),
            Some(_) => Ok(()),
            None => {
                self.materials.insert(name.to_string(), rgba);
                Ok(())
            }
        }
    }

    /// Appends a visual element. A material given with a color is registered
    /// on first use; a material given by name alone must already exist.
    pub fn add_visual(
        &mut self,
        part: PartId,
        name: &str,
        geometry: Geometry,
        origin: Transform,
        material: Option<(&str, Option<Rgba>)>,
    ) -> Result<usize, ModelError> {
        check_name(name)?;
        geometry.validate()?;
        let p = self
            .parts
            .get(part.0)
            .ok_or_else(|| ModelError::UnknownPart(format!("#{}", part.0)))?;
        if p.visual(name).is_some() {
            return Err(ModelError::DuplicateVisualName {
                part: p.name.clone(),
                visual: name.to_string(),
            });
        }
        let material = match material {
            None => None,
            Some((mname, Some(rgba))) => {
                self.add_material(mname, rgba)?;
                Some(mname.to_string())
            }
            Some((mname, None)) => {
                if !self.materials.contains_key(mname) {
                    return Err(ModelError::UnknownMaterial(mname.to_string()));
                }
                Some(mname.to_string())
            }
        };
        let p = &mut self.parts[part.0];
        p.visuals.push(VisualElement {
            name: name.to_string(),
            geometry,
            origin,
            material,
        });
        Ok(p.visuals.len() - 1)
    }

    /// Computes the inertial of `source` at uniform density scaled to `mass`,
    /// placed at `origin` in the part frame, and stores it on the part.
    pub fn set_inertial(
        &mut self,
        part: PartId,
        source: &Geometry,
        mass: f64,
        origin: Transform,
    ) -> Result<Inertial, ModelError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ModelError::InvalidMass(mass));
        }
        source.validate()?;
        let local = geometry::mass::primitive_mass_properties(source, mass)?;
        let frame = origin.to_frame();
        let r = frame.rotation;
        let inertial = Inertial {
            mass,
            center: frame.apply_point(&local.center),
            inertia: r * local.inertia * r.transpose(),
        };
        let p = self
            .parts
            .get_mut(part.0)
            .ok_or_else(|| ModelError::UnknownPart(format!("#{}", part.0)))?;
        p.inertial = Some(inertial.clone());
        Ok(inertial)
    }

    pub fn add_articulation(&mut self, spec: JointSpec) -> Result<usize, ModelError> {
        let JointSpec {
            name,
            joint_type,
            parent,
            child,
            origin,
            axis,
            limits,
            properties,
            mimic,
        } = spec;
        check_name(&name)?;
        if self.joint(&name).is_some() {
            return Err(ModelError::DuplicateJointName(name));
        }
        for p in [&parent, &child] {
            if self.part_id(p).is_none() {
                return Err(ModelError::UnknownPart(p.clone()));
            }
        }
        if parent == child {
            return Err(ModelError::SelfJoint(name));
        }
        let norm = axis.norm();
        if !(norm.is_finite() && norm > AXIS_EPS) {
            return Err(ModelError::ZeroAxis(name));
        }
        let axis = axis / norm;
        match (joint_type.requires_limits(), &limits) {
            (true, None) => return Err(ModelError::LimitsRequired(name, joint_type)),
            (false, Some(_)) => return Err(ModelError::LimitsForbidden(name, joint_type)),
            (true, Some(l)) => l.check().map_err(|e| ModelError::InvalidLimits(name.clone(), e))?,
            (false, None) => {}
        }
        if let Some(props) = &properties {
            if !(props.effort >= 0.0 && props.velocity >= 0.0) {
                return Err(ModelError::InvalidLimits(
                    name,
                    "effort and velocity must be non-negative".into(),
                ));
            }
        }
        if let Some(m) = &mimic {
            let ok = self
                .joint(&m.joint)
                .is_some_and(|src| src.joint_type != JointType::Fixed)
                && joint_type != JointType::Fixed
                && m.multiplier.is_finite()
                && m.offset.is_finite();
            if !ok {
                return Err(ModelError::InvalidMimic {
                    joint: name,
                    source_joint: m.joint.clone(),
                });
            }
        }
        self.joints.push(Articulation {
            name,
            joint_type,
            parent,
            child,
            origin,
            axis,
            limits,
            properties,
            mimic,
        });
        Ok(self.joints.len() - 1)
    }

    /// The unique part that is never a joint child. `Ok(None)` only for an
    /// object with no parts.
    pub fn root_part(&self) -> Result<Option<&Part>, ModelError> {
        if self.parts.is_empty() {
            return Ok(None);
        }
        let children: HashSet<&str> = self.joints.iter().map(|j| j.child.as_str()).collect();
        let roots: Vec<&Part> = self
            .parts
            .iter()
            .filter(|p| !children.contains(p.name.as_str()))
            .collect();
        match roots.len() {
            0 => Err(ModelError::NoRoot),
            1 => Ok(Some(roots[0])),
            _ if self.joints.is_empty() => Ok(Some(roots[0])),
            _ => Err(ModelError::MultipleRoots(
                roots.iter().map(|p| p.name.clone()).collect(),
            )),
        }
    }

    /// Full re-validation of every object and joint invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        check_name(&self.name)?;
        let mut part_names = HashSet::new();
        for p in &self.parts {
            check_name(&p.name)?;
            if !part_names.insert(p.name.as_str()) {
                return Err(ModelError::DuplicatePartName(p.name.clone()));
            }
            let mut vis = HashSet::new();
            for v in &p.visuals {
                v.geometry.validate()?;
                if !vis.insert(v.name.as_str()) {
                    return Err(ModelError::DuplicateVisualName {
                        part: p.name.clone(),
                        visual: v.name.clone(),
                    });
                }
                if let Some(m) = &v.material {
                    if !self.materials.contains_key(m) {
                        return Err(ModelError::UnknownMaterial(m.clone()));
                    }
                }
            }
            if let Some(i) = &p.inertial {
                if !(i.mass.is_finite() && i.mass > 0.0) {
                    return Err(ModelError::InvalidMass(i.mass));
                }
            }
        }
        let mut joint_names = HashSet::new();
        let mut children = HashSet::new();
        for (idx, j) in self.joints.iter().enumerate() {
            if !joint_names.insert(j.name.as_str()) {
                return Err(ModelError::DuplicateJointName(j.name.clone()));
            }
            for p in [&j.parent, &j.child] {
                if !part_names.contains(p.as_str()) {
                    return Err(ModelError::UnknownPart(p.clone()));
                }
            }
            if j.parent == j.child {
                return Err(ModelError::SelfJoint(j.name.clone()));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(ModelError::ZeroAxis(j.name.clone()));
            }
            match (j.joint_type.requires_limits(), &j.limits) {
                (true, None) => return Err(ModelError::LimitsRequired(j.name.clone(), j.joint_type)),
                (false, Some(_)) => {
                    return Err(ModelError::LimitsForbidden(j.name.clone(), j.joint_type))
                }
                (true, Some(l)) => {
                    l.check().map_err(|e| ModelError::InvalidLimits(j.name.clone(), e))?
                }
                _ => {}
            }
            if let Some(m) = &j.mimic {
                // Sources must be declared earlier, which also rules out cycles.
                let ok = self.joints[..idx]
                    .iter()
                    .any(|s| s.name == m.joint && s.joint_type != JointType::Fixed);
                if !ok {
                    return Err(ModelError::InvalidMimic {
                        joint: j.name.clone(),
                        source_joint: m.joint.clone(),
                    });
                }
            }
            if !children.insert(j.child.as_str()) {
                return Err(ModelError::MultipleParents(j.child.clone()));
            }
        }
        self.root_part()?;
        Ok(())
    }

    /// SHA-256 over a canonical serialization of names, types and parameters.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("object serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lamp_base() -> (ArticulatedObject, PartId) {
        let mut obj = ArticulatedObject::new("desk_lamp").unwrap();
        let base = obj.add_part("base").unwrap();
        (obj, base)
    }

    #[test]
    fn new_object_names() {
        let obj = ArticulatedObject::new("desk_lamp").unwrap();
        assert_eq!(obj.parts().len(), 0);
        assert_eq!(obj.joints().len(), 0);
        assert!(obj.materials().is_empty());
        assert_eq!(ArticulatedObject::new("x").unwrap().name(), "x");
        assert_eq!(ArticulatedObject::new("").unwrap_err().code(), "invalid_name");
        assert_eq!(ArticulatedObject::new("a b").unwrap_err().code(), "invalid_name");
    }

    #[test]
    fn parts_keep_declaration_order() {
        let (mut obj, _) = lamp_base();
        obj.add_part("lower_arm").unwrap();
        let names: Vec<_> = obj.parts().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["base", "lower_arm"]);
        assert_eq!(obj.add_part("base").unwrap_err().code(), "duplicate_part_name");
        assert!(obj.add_part("door_0").is_ok());
    }

    #[test]
    fn visuals_and_materials() {
        let (mut obj, base) = lamp_base();
        let finish = Rgba::new(0.16, 0.17, 0.19, 1.0);
        obj.add_visual(
            base,
            "base_plate",
            Geometry::Cylinder {
                radius: 0.11,
                length: 0.02,
            },
            Transform::from_xyz(0.0, 0.0, 0.01),
            Some(("base_finish", Some(finish))),
        )
        .unwrap();
        assert_eq!(obj.part(base).visuals.len(), 1);
        assert_eq!(obj.materials()["base_finish"], finish);
        // same name, different color
        let err = obj
            .add_visual(
                base,
                "cap",
                Geometry::Sphere { radius: 0.01 },
                Transform::identity(),
                Some(("base_finish", Some(Rgba::new(1.0, 0.0, 0.0, 1.0)))),
            )
            .unwrap_err();
        assert_eq!(err.code(), "material_conflict");
        let err = obj
            .add_visual(
                base,
                "base_plate",
                Geometry::Box {
                    size: Vec3::new(1.0, 1.0, 1.0),
                },
                Transform::identity(),
                None,
            )
            .unwrap_err();
        assert_eq!(err.code(), "duplicate_visual_name");
        let err = obj
            .add_visual(
                base,
                "bad",
                Geometry::Cylinder {
                    radius: -0.1,
                    length: 1.0,
                },
                Transform::identity(),
                None,
            )
            .unwrap_err();
        assert_eq!(err.code(), "invalid_geometry");
    }

    #[test]
    fn cone_radius_rules() {
        let ok = Geometry::Cone {
            r_bottom: 0.1,
            r_top: 0.0,
            length: 1.0,
        };
        assert!(ok.validate().is_ok());
        let bad = Geometry::Cone {
            r_bottom: 0.0,
            r_top: 0.0,
            length: 1.0,
        };
        assert_eq!(bad.validate().unwrap_err().code(), "invalid_geometry");
    }

    #[test]
    fn inertial_of_cylinder_and_sphere() {
        let (mut obj, base) = lamp_base();
        let (r, l) = (0.11, 0.02);
        let i = obj
            .set_inertial(
                base,
                &Geometry::Cylinder { radius: r, length: l },
                2.4,
                Transform::from_xyz(0.0, 0.0, l / 2.0),
            )
            .unwrap();
        assert!((i.inertia[(2, 2)] - 0.5 * 2.4 * r * r).abs() < 1e-15);
        assert_eq!(i.center, Vec3::new(0.0, 0.0, 0.01));
        let s = obj
            .set_inertial(base, &Geometry::Sphere { radius: 0.3 }, 2.0, Transform::identity())
            .unwrap();
        let expected = 0.4 * 2.0 * 0.09;
        for k in 0..3 {
            assert!((s.inertia[(k, k)] - expected).abs() < 1e-15);
        }
        let err = obj
            .set_inertial(
                base,
                &Geometry::Box {
                    size: Vec3::new(1.0, 1.0, 1.0),
                },
                0.0,
                Transform::identity(),
            )
            .unwrap_err();
        assert_eq!(err.code(), "invalid_mass");
    }

    fn two_parts() -> ArticulatedObject {
        let (mut obj, _) = lamp_base();
        obj.add_part("lower_arm").unwrap();
        obj
    }

    #[test]
    fn revolute_joint_from_lamp() {
        let mut obj = two_parts();
        obj.add_articulation(
            JointSpec::new(
                "base_to_lower_arm",
                JointType::Revolute,
                "base",
                "lower_arm",
                Transform::from_xyz(0.0, 0.0, 0.05),
                Vec3::new(0.0, -2.0, 0.0),
            )
            .with_limits(MotionLimits::new(-0.35, 1.15, 18.0, 1.6)),
        )
        .unwrap();
        let j = obj.joint("base_to_lower_arm").unwrap();
        assert_eq!(j.axis, Vec3::new(0.0, -1.0, 0.0));
        obj.validate().unwrap();
        assert_eq!(obj.root_part().unwrap().unwrap().name, "base");
    }

    #[test]
    fn joint_errors() {
        let mut obj = two_parts();
        let base = |t, axis| {
            JointSpec::new("j", t, "base", "lower_arm", Transform::identity(), axis)
        };
        let lim = MotionLimits::new(-1.0, 1.0, 1.0, 1.0);
        let cases = [
            (base(JointType::Continuous, Vec3::z()).with_limits(lim), "limits_forbidden"),
            (base(JointType::Fixed, Vec3::z()).with_limits(lim), "limits_forbidden"),
            (base(JointType::Revolute, Vec3::z()), "limits_required"),
            (base(JointType::Revolute, Vec3::zeros()).with_limits(lim), "zero_axis"),
            (
                base(JointType::Prismatic, Vec3::z()).with_limits(MotionLimits::new(1.0, 0.0, 1.0, 1.0)),
                "invalid_limits",
            ),
            (
                JointSpec::new("j", JointType::Fixed, "base", "ghost", Transform::identity(), Vec3::z()),
                "unknown_part",
            ),
            (
                JointSpec::new("j", JointType::Fixed, "base", "base", Transform::identity(), Vec3::z()),
                "self_joint",
            ),
            (base(JointType::Continuous, Vec3::z()).with_mimic("nope", 1.0, 0.0), "invalid_mimic"),
        ];
        for (spec, code) in cases {
            assert_eq!(obj.add_articulation(spec).unwrap_err().code(), code);
        }
        assert!(obj.joints().is_empty());
    }

    #[test]
    fn root_rules() {
        let mut obj = two_parts();
        obj.add_part("shade").unwrap();
        // no joints: first part is the root
        assert_eq!(obj.root_part().unwrap().unwrap().name, "base");
        obj.add_articulation(JointSpec::new(
            "a",
            JointType::Fixed,
            "base",
            "lower_arm",
            Transform::identity(),
            Vec3::z(),
        ))
        .unwrap();
        assert_eq!(obj.validate().unwrap_err().code(), "multiple_roots");
    }

    #[test]
    fn digest_tracks_construction() {
        let build = |r: f64| {
            let (mut obj, base) = lamp_base();
            obj.add_visual(base, "plate", Geometry::Sphere { radius: r }, Transform::identity(), None)
                .unwrap();
            obj.digest()
        };
        assert_eq!(build(0.1), build(0.1));
        assert_ne!(build(0.1), build(0.2));
    }
}
