//! Wavefront OBJ subset: `v` and triangular `f` records.

use crate::geometry::TriMesh;
use crate::lang::value::format_number;
use crate::math::Vec3;

use super::UrdfError;

pub fn write_obj(name: &str, mesh: &TriMesh) -> String {
    let mut out = format!("# {name}\no {name}\n");
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", format_number(v.x), format_number(v.y), format_number(v.z)));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

pub fn read_obj(text: &str) -> Result<TriMesh, UrdfError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let bad = |n: usize, what: &str| UrdfError::Parse(format!("OBJ line {n}: {what}"));
    for (i, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|s| s.parse::<f64>().map_err(|_| bad(i + 1, "bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(bad(i + 1, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|s| {
                        // `f 1/2/3` keeps the position index only
                        let head = s.split('/').next().unwrap_or("");
                        match head.parse::<i64>() {
                            Ok(k) if k >= 1 => Ok(k as u32 - 1),
                            _ => Err(bad(i + 1, "bad face index")),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(bad(i + 1, "face needs three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if triangles.iter().flatten().any(|&k| k as usize >= vertices.len()) {
        return Err(UrdfError::Parse("OBJ face index out of range".into()));
    }
    Ok(TriMesh::new(vertices, triangles))
}
