use std::path::Path;

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::math::{Transform, Vec3};
use crate::model::Mimic;

use super::UrdfError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualSummary {
    pub name: Option<String>,
    /// `box`, `cylinder`, `sphere` or `mesh`.
    pub kind: String,
    pub mesh: Option<String>,
    pub origin: Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub name: String,
    pub visuals: Vec<VisualSummary>,
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub effort: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub name: String,
    pub joint_type: String,
    pub parent: String,
    pub child: String,
    pub origin: Transform,
    pub axis: Option<Vec3>,
    pub limits: Option<LimitSummary>,
    pub mimic: Option<Mimic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrdfSummary {
    pub name: String,
    pub links: Vec<LinkSummary>,
    pub joints: Vec<JointSummary>,
    pub mesh_files: Vec<String>,
    /// Links that are never a joint child.
    pub roots: Vec<String>,
    pub multiple_roots: bool,
}

fn parse_err(msg: impl Into<String>) -> UrdfError {
    UrdfError::Parse(msg.into())
}

fn attr<'a>(n: &Node<'a, '_>, name: &str) -> Result<&'a str, UrdfError> {
    n.attribute(name)
        .ok_or_else(|| parse_err(format!("<{}> is missing attribute '{name}'", n.tag_name().name())))
}

fn num(s: &str) -> Result<f64, UrdfError> {
    s.trim().parse::<f64>().map_err(|_| parse_err(format!("'{s}' is not a number")))
}

fn opt_num(n: &Node, name: &str) -> Result<Option<f64>, UrdfError> {
    n.attribute(name).map(num).transpose()
}

fn vec3(s: &str) -> Result<Vec3, UrdfError> {
    let v: Vec<f64> = s.split_whitespace().map(num).collect::<Result<_, _>>()?;
    if v.len() != 3 {
        return Err(parse_err(format!("'{s}' is not a 3-vector")));
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn child<'a, 'i>(n: &Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    n.children().find(|c| c.has_tag_name(tag))
}

fn origin(n: &Node) -> Result<Transform, UrdfError> {
    let Some(o) = child(n, "origin") else {
        return Ok(Transform::identity());
    };
    let xyz = o.attribute("xyz").map(vec3).transpose()?.unwrap_or_else(Vec3::zeros);
    let rpy = o.attribute("rpy").map(vec3).transpose()?.unwrap_or_else(Vec3::zeros);
    Ok(Transform::new(xyz, rpy))
}

/// Structural summary of URDF text. When `base_dir` is given, referenced
/// mesh files must exist relative to it.
pub fn parse_urdf_summary(xml: &str, base_dir: Option<&Path>) -> Result<UrdfSummary, UrdfError> {
    let doc = Document::parse(xml).map_err(|e| parse_err(e.to_string()))?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(parse_err("root element is not <robot>"));
    }
    let mut links = Vec::new();
    let mut mesh_files = Vec::new();
    for l in robot.children().filter(|c| c.has_tag_name("link")) {
        let mut visuals = Vec::new();
        for v in l.children().filter(|c| c.has_tag_name("visual")) {
            let g = child(&v, "geometry").ok_or_else(|| parse_err("<visual> without <geometry>"))?;
            let shape = g
                .children()
                .find(|c| c.is_element())
                .ok_or_else(|| parse_err("empty <geometry>"))?;
            let kind = shape.tag_name().name().to_string();
            let mesh = if kind == "mesh" {
                let f = attr(&shape, "filename")?.to_string();
                if let Some(base) = base_dir {
                    if !base.join(&f).is_file() {
                        return Err(UrdfError::MissingMeshFile(f));
                    }
                }
                mesh_files.push(f.clone());
                Some(f)
            } else {
                None
            };
            visuals.push(VisualSummary {
                name: v.attribute("name").map(str::to_string),
                kind,
                mesh,
                origin: origin(&v)?,
            });
        }
        let mass = match child(&l, "inertial").and_then(|i| child(&i, "mass")) {
            Some(m) => Some(num(attr(&m, "value")?)?),
            None => None,
        };
        links.push(LinkSummary {
            name: attr(&l, "name")?.to_string(),
            visuals,
            mass,
        });
    }
    let mut joints = Vec::new();
    for j in robot.children().filter(|c| c.has_tag_name("joint")) {
        let name = attr(&j, "name")?.to_string();
        let link_of = |tag: &str| -> Result<String, UrdfError> {
            let n = child(&j, tag).ok_or_else(|| parse_err(format!("joint '{name}' has no <{tag}>")))?;
            let link = attr(&n, "link")?.to_string();
            if !links.iter().any(|l| l.name == link) {
                return Err(UrdfError::DanglingLinkReference {
                    joint: name.clone(),
                    link,
                });
            }
            Ok(link)
        };
        let (parent, child_link) = (link_of("parent")?, link_of("child")?);
        let joint_type = attr(&j, "type")?.to_string();
        let axis = match child(&j, "axis") {
            Some(a) => Some(vec3(attr(&a, "xyz")?)?),
            None if joint_type == "fixed" => None,
            None => Some(Vec3::new(1.0, 0.0, 0.0)),
        };
        let limits = match child(&j, "limit") {
            Some(l) => Some(LimitSummary {
                lower: opt_num(&l, "lower")?,
                upper: opt_num(&l, "upper")?,
                effort: num(attr(&l, "effort")?)?,
                velocity: num(attr(&l, "velocity")?)?,
            }),
            None => None,
        };
        let mimic = match child(&j, "mimic") {
            Some(m) => Some(Mimic {
                joint: attr(&m, "joint")?.to_string(),
                multiplier: opt_num(&m, "multiplier")?.unwrap_or(1.0),
                offset: opt_num(&m, "offset")?.unwrap_or(0.0),
            }),
            None => None,
        };
        joints.push(JointSummary {
            origin: origin(&j)?,
            name,
            joint_type,
            parent,
            child: child_link,
            axis,
            limits,
            mimic,
        });
    }
    let roots: Vec<String> = links
        .iter()
        .filter(|l| !joints.iter().any(|j| j.child == l.name))
        .map(|l| l.name.clone())
        .collect();
    Ok(UrdfSummary {
        name: attr(&robot, "name")?.to_string(),
        multiple_roots: roots.len() > 1,
        roots,
        links,
        joints,
        mesh_files,
    })
}

pub fn import_urdf_summary(path: &Path) -> Result<UrdfSummary, UrdfError> {
    let xml = std::fs::read_to_string(path).map_err(|e| UrdfError::io(path, e))?;
    parse_urdf_summary(&xml, Some(path.parent().unwrap_or(Path::new("."))))
}
