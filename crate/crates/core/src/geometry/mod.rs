//! Triangle meshes and the geometric queries the validator is built on.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Frame, Transform, Vec3};
use crate::model::Geometry;

pub mod bvh;
pub mod distance;
pub mod mass;
pub mod penetration;
pub mod primitives;
pub mod procedural;

pub use distance::{min_distance, ProximityResult};
pub use mass::mass_properties;
pub use penetration::{penetration_measure, PenetrationMeasure, PenetrationOptions};
pub use primitives::mesh_from_primitive;

/// Segments per revolution used when nothing else is requested.
pub const DEFAULT_TESSELLATION: usize = 64;
pub const MIN_TESSELLATION: usize = 8;
/// Distance at or below which two bodies count as touching, meters.
pub const CONTACT_TOLERANCE: f64 = 5e-4;
/// Penetration depth above which an overlap is significant, meters.
pub const OVERLAP_DEPTH_THRESHOLD: f64 = 1e-4;
/// Penetration volume above which an overlap is significant, cubic meters.
pub const OVERLAP_VOLUME_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0x5EED;

const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("tessellation {0} is below the minimum of {MIN_TESSELLATION} segments")]
    InvalidTessellation(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("holes overlap: {0}")]
    HolesOverlap(String),
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("mesh is not watertight")]
    NonWatertight,
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

impl GeometryError {
    pub fn code(&self) -> &'static str {
        match self {
            GeometryError::InvalidGeometry(_) => "invalid_geometry",
            GeometryError::InvalidTessellation(_) => "invalid_tessellation",
            GeometryError::InvalidParams(_) => "invalid_params",
            GeometryError::HolesOverlap(_) => "holes_overlap",
            GeometryError::EmptyMesh => "empty_mesh",
            GeometryError::NonWatertight => "non_watertight_input",
            GeometryError::InvalidMass(_) => "invalid_mass",
            GeometryError::InvalidMesh(_) => "invalid_mesh",
        }
    }
}

/// Indexed triangle mesh in meters, counter-clockwise outward winding.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            vertices,
            triangles,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Index range and degenerate-triangle check.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {i} references a missing vertex"
                )));
            }
            let [a, b, c] = self.triangle(i);
            if 0.5 * (b - a).cross(&(c - a)).norm() <= DEGENERATE_AREA {
                return Err(GeometryError::InvalidMesh(format!("triangle {i} is degenerate")));
            }
        }
        Ok(())
    }

    /// Concatenates meshes without welding.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut out = TriMesh::default();
        for m in meshes {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&m.vertices);
            out.triangles
                .extend(m.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        }
        out
    }

    /// Signed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        let mut six_v = 0.0;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(i);
            six_v += a.dot(&b.cross(&c));
        }
        six_v / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    pub fn transformed(&self, frame: &Frame) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| frame.apply_point(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn aabb(&self) -> Result<Aabb, GeometryError> {
        Aabb::from_points(self.vertices.iter()).ok_or(GeometryError::EmptyMesh)
    }
}

pub fn transform_mesh(mesh: &TriMesh, t: &Transform) -> TriMesh {
    mesh.transformed(&t.to_frame())
}

/// Mesh for any geometry variant at the given tessellation.
pub fn mesh_for_geometry(geometry: &Geometry, segments: usize) -> Result<TriMesh, GeometryError> {
    match geometry {
        Geometry::Procedural(p) => p.mesh(segments),
        _ => mesh_from_primitive(geometry, segments),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(mut points: impl Iterator<Item = &'a Vec3>) -> Option<Aabb> {
        let first = points.next()?;
        let mut b = Aabb::new(*first, *first);
        for p in points {
            b.grow(p);
        }
        Some(b)
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    /// Intersection box; `None` unless every extent is strictly positive.
    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let min = self.min.sup(&other.min);
        let max = self.max.inf(&other.max);
        (0..3).all(|k| max[k] > min[k]).then(|| Aabb::new(min, max))
    }

    pub fn volume(&self) -> f64 {
        let e = self.max - self.min;
        e.x * e.y * e.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Euclidean gap between boxes, zero when they touch or overlap.
    pub fn distance(&self, other: &Aabb) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let gap = (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]);
            if gap > 0.0 {
                d2 += gap * gap;
            }
        }
        d2.sqrt()
    }

    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let gap = (self.min[k] - p[k]).max(p[k] - self.max[k]);
            if gap > 0.0 {
                d2 += gap * gap;
            }
        }
        d2.sqrt()
    }
}

/// Edge census of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatertightReport {
    pub closed: bool,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    /// Manifold edges whose two triangles traverse them in the same direction.
    pub inconsistent_edges: usize,
    pub euler_characteristic: i64,
}

pub fn watertight_check(mesh: &TriMesh) -> WatertightReport {
    // undirected edge -> (uses, signed direction sum)
    let mut edges: HashMap<(u32, u32), (usize, i32)> = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let (key, dir) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
            let e = edges.entry(key).or_insert((0, 0));
            e.0 += 1;
            e.1 += dir;
        }
    }
    let mut boundary = 0;
    let mut non_manifold = 0;
    let mut inconsistent = 0;
    for (uses, dir) in edges.values() {
        match uses {
            1 => boundary += 1,
            2 if *dir != 0 => inconsistent += 1,
            2 => {}
            _ => non_manifold += 1,
        }
    }
    WatertightReport {
        closed: boundary == 0 && non_manifold == 0,
        boundary_edges: boundary,
        non_manifold_edges: non_manifold,
        inconsistent_edges: inconsistent,
        euler_characteristic: mesh.vertices.len() as i64 - edges.len() as i64
            + mesh.triangles.len() as i64,
    }
}
