use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{mesh_for_geometry, DEFAULT_TESSELLATION};
use crate::kinematics::build_kinematic_tree;
use crate::lang::value::format_number;
use crate::math::{Transform, Vec3};
use crate::model::{ArticulatedObject, Geometry, JointType};
use crate::sha256_hex;

use super::obj::write_obj;
use super::{ExportManifest, MeshFile, UrdfError, MANIFEST_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportOptions {
    pub tessellation: usize,
    /// Write box/cylinder/sphere visuals as meshes too.
    pub force_meshes: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            tessellation: DEFAULT_TESSELLATION,
            force_meshes: false,
        }
    }
}

/// An export held in memory: URDF text plus mesh files keyed by relative path.
#[derive(Debug, Clone, PartialEq)]
pub struct Package {
    pub urdf_name: String,
    pub urdf: String,
    pub meshes: Vec<(String, String, usize)>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn triple(v: &Vec3) -> String {
    format!("{} {} {}", format_number(v.x), format_number(v.y), format_number(v.z))
}

fn origin_tag(t: &Transform, indent: &str) -> String {
    format!("{indent}<origin xyz=\"{}\" rpy=\"{}\"/>\n", triple(&t.xyz), triple(&t.rpy))
}

pub fn mesh_path(part: &str, visual: &str) -> String {
    format!("meshes/{part}__{visual}.obj")
}

pub fn render_package(obj: &ArticulatedObject, options: &ExportOptions) -> Result<Package, UrdfError> {
    obj.validate().map_err(|e| UrdfError::InvalidObject(e.to_string()))?;
    build_kinematic_tree(obj).map_err(|e| UrdfError::InvalidObject(e.to_string()))?;
    let n = format_number;
    let mut x = String::from("<?xml version=\"1.0\"?>\n");
    writeln!(x, "<robot name=\"{}\">", xml_escape(obj.name())).unwrap();
    for (name, rgba) in obj.materials() {
        let [r, g, b, a] = rgba.0;
        writeln!(x, "  <material name=\"{}\">", xml_escape(name)).unwrap();
        writeln!(x, "    <color rgba=\"{} {} {} {}\"/>", n(r), n(g), n(b), n(a)).unwrap();
        x.push_str("  </material>\n");
    }
    let mut meshes = Vec::new();
    for part in obj.parts() {
        writeln!(x, "  <link name=\"{}\">", xml_escape(&part.name)).unwrap();
        if let Some(inertial) = &part.inertial {
            let i = &inertial.inertia;
            x.push_str("    <inertial>\n");
            x.push_str(&origin_tag(&Transform::new(inertial.center, Vec3::zeros()), "      "));
            writeln!(x, "      <mass value=\"{}\"/>", n(inertial.mass)).unwrap();
            writeln!(
                x,
                "      <inertia ixx=\"{}\" ixy=\"{}\" ixz=\"{}\" iyy=\"{}\" iyz=\"{}\" izz=\"{}\"/>",
                n(i[(0, 0)]),
                n(i[(0, 1)]),
                n(i[(0, 2)]),
                n(i[(1, 1)]),
                n(i[(1, 2)]),
                n(i[(2, 2)])
            )
            .unwrap();
            x.push_str("    </inertial>\n");
        }
        for v in &part.visuals {
            writeln!(x, "    <visual name=\"{}\">", xml_escape(&v.name)).unwrap();
            x.push_str(&origin_tag(&v.origin, "      "));
            x.push_str("      <geometry>\n");
            let native = match (&v.geometry, options.force_meshes) {
                (_, true) => None,
                (Geometry::Box { size }, _) => Some(format!("<box size=\"{}\"/>", triple(size))),
                (Geometry::Cylinder { radius, length }, _) => {
                    Some(format!("<cylinder radius=\"{}\" length=\"{}\"/>", n(*radius), n(*length)))
                }
                (Geometry::Sphere { radius }, _) => Some(format!("<sphere radius=\"{}\"/>", n(*radius))),
                _ => None,
            };
            match native {
                Some(tag) => writeln!(x, "        {tag}").unwrap(),
                None => {
                    let path = mesh_path(&part.name, &v.name);
                    let mesh = mesh_for_geometry(&v.geometry, options.tessellation)
                        .map_err(|e| UrdfError::InvalidObject(e.to_string()))?;
                    let text = write_obj(&format!("{}__{}", part.name, v.name), &mesh);
                    writeln!(x, "        <mesh filename=\"{}\"/>", xml_escape(&path)).unwrap();
                    meshes.push((path, text, mesh.triangles.len()));
                }
            }
            x.push_str("      </geometry>\n");
            if let Some(m) = &v.material {
                writeln!(x, "      <material name=\"{}\"/>", xml_escape(m)).unwrap();
            }
            x.push_str("    </visual>\n");
        }
        x.push_str("  </link>\n");
    }
    for j in obj.joints() {
        writeln!(x, "  <joint name=\"{}\" type=\"{}\">", xml_escape(&j.name), j.joint_type.as_str()).unwrap();
        writeln!(x, "    <parent link=\"{}\"/>", xml_escape(&j.parent)).unwrap();
        writeln!(x, "    <child link=\"{}\"/>", xml_escape(&j.child)).unwrap();
        x.push_str(&origin_tag(&j.origin, "    "));
        if j.joint_type != JointType::Fixed {
            writeln!(x, "    <axis xyz=\"{}\"/>", triple(&j.axis)).unwrap();
        }
        match (j.joint_type, &j.limits, &j.properties) {
            (JointType::Fixed, _, _) => {}
            (_, Some(l), _) => writeln!(
                x,
                "    <limit lower=\"{}\" upper=\"{}\" effort=\"{}\" velocity=\"{}\"/>",
                n(l.lower),
                n(l.upper),
                n(l.effort),
                n(l.velocity)
            )
            .unwrap(),
            (JointType::Continuous, None, Some(p)) => {
                writeln!(x, "    <limit effort=\"{}\" velocity=\"{}\"/>", n(p.effort), n(p.velocity)).unwrap()
            }
            _ => {}
        }
        if let Some(m) = &j.mimic {
            writeln!(
                x,
                "    <mimic joint=\"{}\" multiplier=\"{}\" offset=\"{}\"/>",
                xml_escape(&m.joint),
                n(m.multiplier),
                n(m.offset)
            )
            .unwrap();
        }
        x.push_str("  </joint>\n");
    }
    x.push_str("</robot>\n");
    Ok(Package {
        urdf_name: format!("{}.urdf", obj.name()),
        urdf: x,
        meshes,
    })
}

fn write(path: &Path, data: &str) -> Result<(), UrdfError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| UrdfError::io(dir, e))?;
    }
    std::fs::write(path, data).map_err(|e| UrdfError::io(path, e))
}

/// Writes the URDF, its mesh files and `manifest.json` under `out_dir`.
pub fn export_urdf(obj: &ArticulatedObject, out_dir: &Path, options: &ExportOptions) -> Result<ExportManifest, UrdfError> {
    let pkg = render_package(obj, options)?;
    write(&out_dir.join(&pkg.urdf_name), &pkg.urdf)?;
    let mut meshes = Vec::new();
    for (path, text, triangles) in &pkg.meshes {
        write(&out_dir.join(path), text)?;
        meshes.push(MeshFile {
            path: path.clone(),
            sha256: sha256_hex(text.as_bytes()),
            triangles: *triangles,
        });
    }
    let manifest = ExportManifest {
        urdf: pkg.urdf_name.clone(),
        urdf_sha256: sha256_hex(pkg.urdf.as_bytes()),
        meshes,
        links: obj.parts().len(),
        joints: obj.joints().len(),
        options: *options,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&out_dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}
