//! Meshes of every visual element placed in the world at a given pose.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::distance::min_distance;
use crate::geometry::penetration::SolidClassifier;
use crate::geometry::{mesh_for_geometry, Aabb, GeometryError, TriMesh};
use crate::kinematics::PosedFrames;
use crate::lang::Target;
use crate::math::Vec3;
use crate::model::ArticulatedObject;

/// Visual meshes in their part frames, generated once per compile.
#[derive(Debug, Clone)]
pub struct LocalMeshes {
    parts: Vec<(String, Vec<(String, TriMesh)>)>,
}

impl LocalMeshes {
    pub fn build(obj: &ArticulatedObject, tessellation: usize) -> Result<Self, GeometryError> {
        let parts = obj
            .parts()
            .iter()
            .map(|p| {
                let visuals = p
                    .visuals
                    .iter()
                    .map(|v| {
                        let mesh = mesh_for_geometry(&v.geometry, tessellation)?;
                        Ok((v.name.clone(), mesh.transformed(&v.origin.to_frame())))
                    })
                    .collect::<Result<Vec<_>, GeometryError>>()?;
                Ok((p.name.clone(), visuals))
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(Self { parts })
    }

    pub fn pose(&self, frames: &PosedFrames) -> Scene {
        let parts: Vec<ScenePart> = self
            .parts
            .iter()
            .map(|(name, visuals)| {
                let frame = frames.frame(name).copied().unwrap_or_default();
                let elements: Vec<SceneElement> = visuals
                    .iter()
                    .map(|(vname, mesh)| {
                        let mesh = mesh.transformed(&frame);
                        let aabb = mesh.aabb().expect("generated meshes are non-empty");
                        SceneElement {
                            name: vname.clone(),
                            mesh,
                            aabb,
                        }
                    })
                    .collect();
                let mesh = TriMesh::merge(elements.iter().map(|e| &e.mesh));
                let aabb = elements
                    .iter()
                    .map(|e| e.aabb)
                    .reduce(|a, b| a.union(&b));
                ScenePart {
                    name: name.clone(),
                    origin: frame.translation,
                    elements,
                    mesh,
                    aabb,
                }
            })
            .collect();
        let index = parts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        Scene { parts, index }
    }
}

#[derive(Debug, Clone)]
pub struct SceneElement {
    pub name: String,
    pub mesh: TriMesh,
    pub aabb: Aabb,
}

#[derive(Debug, Clone)]
pub struct ScenePart {
    pub name: String,
    /// World position of the part frame.
    pub origin: Vec3,
    pub elements: Vec<SceneElement>,
    pub mesh: TriMesh,
    pub aabb: Option<Aabb>,
}

impl ScenePart {
    pub fn element(&self, name: &str) -> Option<&SceneElement> {
        self.elements.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub parts: Vec<ScenePart>,
    index: HashMap<String, usize>,
}

impl Scene {
    pub fn part(&self, name: &str) -> Option<&ScenePart> {
        self.index.get(name).map(|&i| &self.parts[i])
    }

    /// Mesh of a whole part or of one of its elements; `None` when the
    /// target has no geometry.
    pub fn target_mesh(&self, t: &Target) -> Option<&TriMesh> {
        let p = self.part(&t.part)?;
        let mesh = match &t.element {
            Some(e) => &p.element(e)?.mesh,
            None => &p.mesh,
        };
        (!mesh.is_empty()).then_some(mesh)
    }
}

/// Distance between two solids: zero when either contains the other,
/// otherwise the exact surface distance.
pub fn body_distance(a: &TriMesh, b: &TriMesh) -> Result<f64, GeometryError> {
    let d = min_distance(a, b, 0.0)?.distance;
    if d == 0.0 {
        return Ok(0.0);
    }
    let (ba, bb) = (a.aabb()?, b.aabb()?);
    let inside = |inner: &TriMesh, outer: &TriMesh, outer_box: &Aabb| {
        outer_box.contains(&inner.vertices[0]) && SolidClassifier::new(outer).contains(&inner.vertices[0])
    };
    if inside(a, b, &bb) || inside(b, a, &ba) {
        return Ok(0.0);
    }
    Ok(d)
}

/// Area-weighted surface samples from a fixed seed.
pub fn surface_samples(mesh: &TriMesh, count: usize, seed: u64) -> Vec<Vec3> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        total += 0.5 * (b - a).cross(&(c - a)).norm();
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pick: f64 = rng.random::<f64>() * total;
            let t = cumulative.partition_point(|&c| c < pick).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(t);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
        })
        .collect()
}
