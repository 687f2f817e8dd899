//! Point-in-solid classification and interpenetration estimates.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bvh::{Bvh, NodeKind};
use super::distance::point_mesh_distance;
use super::{watertight_check, Aabb, GeometryError, TriMesh, DEFAULT_SEED};
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenetrationOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for PenetrationOptions {
    fn default() -> Self {
        Self {
            samples: 4096,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenetrationMeasure {
    pub overlapping: bool,
    pub depth: f64,
    pub volume: f64,
    pub element_a: Option<String>,
    pub element_b: Option<String>,
}

impl PenetrationMeasure {
    pub fn none() -> Self {
        Self {
            overlapping: false,
            depth: 0.0,
            volume: 0.0,
            element_a: None,
            element_b: None,
        }
    }
}

// Fixed, mutually skewed ray directions; a majority vote over three rays
// absorbs the rare ray that grazes an edge.
#[allow(clippy::approx_constant)]
const RAY_DIRS: [[f64; 3]; 3] = [
    [0.577_215_664_9, 0.618_033_988_7, 0.532_088_886_2],
    [-0.707_106_781_1, 0.141_421_356_2, 0.692_820_323_0],
    [0.301_029_995_6, -0.866_025_403_7, -0.398_942_280_4],
];

/// Point-in-solid test against a closed mesh by signed ray crossings.
pub struct SolidClassifier<'m> {
    bvh: Bvh<'m>,
}

impl<'m> SolidClassifier<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        Self {
            bvh: Bvh::build(mesh),
        }
    }

    pub fn bvh(&self) -> &Bvh<'m> {
        &self.bvh
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.bvh.root().map(|n| n.bounds)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match self.bounds() {
            Some(b) if b.contains(p) => {}
            _ => return false,
        }
        let votes = RAY_DIRS
            .iter()
            .filter(|d| self.winding(p, &Vec3::new(d[0], d[1], d[2]).normalize()) > 0)
            .count();
        votes >= 2
    }

    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        point_mesh_distance(&self.bvh, p)
    }

    /// Sum of crossing signs: +1 when the ray leaves through a face.
    fn winding(&self, origin: &Vec3, dir: &Vec3) -> i32 {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut total = 0;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.bvh.nodes[n];
            if !ray_hits_box(origin, &inv, &node.bounds) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &t in self.bvh.leaf_triangles(start, end) {
                        let [a, b, c] = self.bvh.mesh.triangle(t);
                        total += ray_crossing(origin, dir, &a, &b, &c);
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        total
    }
}

fn ray_hits_box(o: &Vec3, inv: &Vec3, b: &Aabb) -> bool {
    let mut tmin: f64 = 0.0;
    let mut tmax = f64::INFINITY;
    for k in 0..3 {
        let t1 = (b.min[k] - o[k]) * inv[k];
        let t2 = (b.max[k] - o[k]) * inv[k];
        tmin = tmin.max(t1.min(t2));
        tmax = tmax.min(t1.max(t2));
    }
    tmin <= tmax
}

fn ray_crossing(o: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> i32 {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det == 0.0 {
        return 0;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return 0;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return 0;
    }
    let t = inv * e2.dot(&q);
    if t <= 0.0 {
        return 0;
    }
    // det = -dir·n for the outward normal n = e1 × e2
    if det < 0.0 {
        1
    } else {
        -1
    }
}

/// Estimates shared volume and depth of two closed meshes by seeded uniform
/// sampling of their bounding-box intersection.
pub fn penetration_measure(
    a: &TriMesh,
    b: &TriMesh,
    options: &PenetrationOptions,
) -> Result<PenetrationMeasure, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    if !watertight_check(a).closed || !watertight_check(b).closed {
        return Err(GeometryError::NonWatertight);
    }
    let ca = SolidClassifier::new(a);
    let cb = SolidClassifier::new(b);
    Ok(penetration_between(&ca, &cb, options))
}

pub fn penetration_between(
    ca: &SolidClassifier,
    cb: &SolidClassifier,
    options: &PenetrationOptions,
) -> PenetrationMeasure {
    let (Some(ba), Some(bb)) = (ca.bounds(), cb.bounds()) else {
        return PenetrationMeasure::none();
    };
    let Some(region) = ba.intersection(&bb) else {
        return PenetrationMeasure::none();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let extent = region.max - region.min;
    let mut inside = 0usize;
    let mut depth: f64 = 0.0;
    for _ in 0..options.samples {
        let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let p = region.min + Vec3::new(u[0] * extent.x, u[1] * extent.y, u[2] * extent.z);
        if ca.contains(&p) && cb.contains(&p) {
            inside += 1;
            depth = depth
                .max(cb.surface_distance(&p))
                .max(ca.surface_distance(&p));
        }
    }
    let volume = region.volume() * inside as f64 / options.samples.max(1) as f64;
    PenetrationMeasure {
        overlapping: inside > 0,
        depth,
        volume,
        element_a: None,
        element_b: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh_from_primitive, transform_mesh};
    use crate::math::Transform;
    use crate::model::Geometry;

    fn cube(size: f64, x: f64) -> TriMesh {
        let m = mesh_from_primitive(
            &Geometry::Box {
                size: Vec3::new(size, size, size),
            },
            64,
        )
        .unwrap();
        transform_mesh(&m, &Transform::from_xyz(x, 0.0, 0.0))
    }

    #[test]
    fn classifier_inside_outside() {
        let c = cube(1.0, 0.0);
        let s = SolidClassifier::new(&c);
        assert!(s.contains(&Vec3::new(0.1, 0.2, -0.3)));
        assert!(!s.contains(&Vec3::new(0.6, 0.0, 0.0)));
        let sphere = mesh_from_primitive(&Geometry::Sphere { radius: 1.0 }, 32).unwrap();
        let s = SolidClassifier::new(&sphere);
        assert!(s.contains(&Vec3::new(0.5, 0.5, 0.5)));
        assert!(!s.contains(&Vec3::new(0.7, 0.7, 0.7)));
    }

    #[test]
    fn overlapping_cubes_share_a_slab() {
        let m = penetration_measure(&cube(1.0, 0.0), &cube(1.0, 0.8), &PenetrationOptions::default())
            .unwrap();
        assert!(m.overlapping);
        assert!((m.volume - 0.2).abs() / 0.2 < 0.05, "{}", m.volume);
        assert!(m.depth > 0.15 && m.depth <= 0.2 + 1e-12, "{}", m.depth);
    }

    #[test]
    fn disjoint_cubes_do_not_overlap() {
        let m = penetration_measure(&cube(1.0, 0.0), &cube(1.0, 3.0), &PenetrationOptions::default())
            .unwrap();
        assert!(!m.overlapping);
        assert_eq!(m.volume, 0.0);
        let touching =
            penetration_measure(&cube(1.0, 0.0), &cube(1.0, 1.0), &PenetrationOptions::default())
                .unwrap();
        assert!(!touching.overlapping);
    }

    #[test]
    fn contained_cube_volume() {
        let m = penetration_measure(&cube(0.5, 0.0), &cube(2.0, 0.0), &PenetrationOptions::default())
            .unwrap();
        assert!((m.volume - 0.125).abs() / 0.125 < 0.05);
    }

    #[test]
    fn open_mesh_rejected() {
        let mut open = cube(1.0, 0.0);
        open.triangles.pop();
        let err = penetration_measure(&open, &cube(1.0, 0.5), &PenetrationOptions::default())
            .unwrap_err();
        assert_eq!(err.code(), "non_watertight_input");
    }

    #[test]
    fn seeded_estimates_are_reproducible() {
        let run = || {
            penetration_measure(&cube(1.0, 0.0), &cube(1.0, 0.7), &PenetrationOptions::default())
                .unwrap()
        };
        let (x, y) = (run(), run());
        assert_eq!(x.volume.to_bits(), y.volume.to_bits());
        assert_eq!(x.depth.to_bits(), y.depth.to_bits());
    }
}
