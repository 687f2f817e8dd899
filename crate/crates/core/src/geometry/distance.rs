//! Exact minimum distance between triangle meshes.

use serde::{Deserialize, Serialize};

use super::bvh::{Bvh, NodeKind};
use super::{GeometryError, TriMesh};
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityResult {
    pub distance: f64,
    /// Closest point on the first mesh.
    pub witness_a: Vec3,
    /// Closest point on the second mesh.
    pub witness_b: Vec3,
    pub contact: bool,
}

/// Closest point to `p` on triangle `abc` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// Closest points between segments `p1q1` and `p2q2`. The pair is put in a
/// canonical order first so the result does not depend on argument order.
pub fn closest_points_segments(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> (Vec3, Vec3) {
    let first_key = if lex_less(p1, q1) { p1 } else { q1 };
    let second_key = if lex_less(p2, q2) { p2 } else { q2 };
    if lex_less(second_key, first_key) {
        let (b, a) = closest_points_segments_raw(p2, q2, p1, q1);
        return (a, b);
    }
    closest_points_segments_raw(p1, q1, p2, q2)
}

fn closest_points_segments_raw(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> (Vec3, Vec3) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-30;
    let (s, t);
    if a <= EPS && e <= EPS {
        return (*p1, *p2);
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Intersection point of segment `pq` with triangle `abc`, ignoring
/// segments parallel to the triangle plane.
pub fn segment_triangle_intersection(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Vec3> {
    let dir = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = p - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = s.cross(&e1);
    let v = inv * dir.dot(&qv);
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = inv * e2.dot(&qv);
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    Some(p + dir * t)
}

/// Distance between two triangles with witness points on each.
pub fn triangle_distance(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> (f64, Vec3, Vec3) {
    for k in 0..3 {
        let (p, q) = (&t1[k], &t1[(k + 1) % 3]);
        if let Some(x) = segment_triangle_intersection(p, q, &t2[0], &t2[1], &t2[2]) {
            return (0.0, x, x);
        }
        let (p, q) = (&t2[k], &t2[(k + 1) % 3]);
        if let Some(x) = segment_triangle_intersection(p, q, &t1[0], &t1[1], &t1[2]) {
            return (0.0, x, x);
        }
    }
    let mut best = (f64::INFINITY, Vec3::zeros(), Vec3::zeros());
    let mut consider = |a: Vec3, b: Vec3| {
        let d = (a - b).norm();
        if d < best.0 {
            best = (d, a, b);
        }
    };
    for v in t1 {
        consider(*v, closest_point_on_triangle(v, &t2[0], &t2[1], &t2[2]));
    }
    for v in t2 {
        consider(closest_point_on_triangle(v, &t1[0], &t1[1], &t1[2]), *v);
    }
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = closest_points_segments(&t1[i], &t1[(i + 1) % 3], &t2[j], &t2[(j + 1) % 3]);
            consider(a, b);
        }
    }
    best
}

/// Pruning margin so both argument orders evaluate every near-optimal pair.
fn prune(lower_bound: f64, best: f64) -> bool {
    lower_bound > best + 1e-12 * (1.0 + best)
}

/// Exact minimum distance over all triangle pairs, using a dual BVH walk
/// that only skips pairs whose bounds are provably farther than the best
/// distance found so far.
pub fn min_distance(a: &TriMesh, b: &TriMesh, tolerance: f64) -> Result<ProximityResult, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let ba = Bvh::build(a);
    let bb = Bvh::build(b);
    let mut best = (f64::INFINITY, Vec3::zeros(), Vec3::zeros());
    let mut stack = vec![(0usize, 0usize)];
    while let Some((na, nb)) = stack.pop() {
        let (nodea, nodeb) = (&ba.nodes[na], &bb.nodes[nb]);
        if prune(nodea.bounds.distance(&nodeb.bounds), best.0) {
            continue;
        }
        match (nodea.kind, nodeb.kind) {
            (NodeKind::Leaf { start: sa, end: ea }, NodeKind::Leaf { start: sb, end: eb }) => {
                for &ta in ba.leaf_triangles(sa, ea) {
                    for &tb in bb.leaf_triangles(sb, eb) {
                        if prune(ba.tri_bounds[ta].distance(&bb.tri_bounds[tb]), best.0) {
                            continue;
                        }
                        let d = triangle_distance(&a.triangle(ta), &b.triangle(tb));
                        if d.0 < best.0 {
                            best = d;
                        }
                    }
                }
            }
            (NodeKind::Inner { left, right }, NodeKind::Leaf { .. }) => {
                push_ordered(&mut stack, &ba, &bb, (left, nb), (right, nb));
            }
            (NodeKind::Leaf { .. }, NodeKind::Inner { left, right }) => {
                push_ordered(&mut stack, &ba, &bb, (na, left), (na, right));
            }
            (NodeKind::Inner { left: la, right: ra }, NodeKind::Inner { left: lb, right: rb }) => {
                let va = nodea.bounds.volume();
                let vb = nodeb.bounds.volume();
                if va >= vb {
                    push_ordered(&mut stack, &ba, &bb, (la, nb), (ra, nb));
                } else {
                    push_ordered(&mut stack, &ba, &bb, (na, lb), (na, rb));
                }
            }
        }
    }
    Ok(ProximityResult {
        distance: best.0,
        witness_a: best.1,
        witness_b: best.2,
        contact: best.0 <= tolerance,
    })
}

fn push_ordered(stack: &mut Vec<(usize, usize)>, ba: &Bvh, bb: &Bvh, x: (usize, usize), y: (usize, usize)) {
    let dx = ba.nodes[x.0].bounds.distance(&bb.nodes[x.1].bounds);
    let dy = ba.nodes[y.0].bounds.distance(&bb.nodes[y.1].bounds);
    // nearer pair on top of the stack
    if dx <= dy {
        stack.push(y);
        stack.push(x);
    } else {
        stack.push(x);
        stack.push(y);
    }
}

/// Unsigned distance from a point to the mesh surface.
pub fn point_mesh_distance(bvh: &Bvh, p: &Vec3) -> f64 {
    let mut best = f64::INFINITY;
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        let node = &bvh.nodes[n];
        if node.bounds.distance_to_point(p) >= best {
            continue;
        }
        match node.kind {
            NodeKind::Leaf { start, end } => {
                for &t in bvh.leaf_triangles(start, end) {
                    let [a, b, c] = bvh.mesh.triangle(t);
                    let d = (closest_point_on_triangle(p, &a, &b, &c) - p).norm();
                    if d < best {
                        best = d;
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                stack.push(left);
                stack.push(right);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh_from_primitive, transform_mesh, CONTACT_TOLERANCE};
    use crate::math::Transform;
    use crate::model::Geometry;

    fn cube_at(x: f64) -> TriMesh {
        let m = mesh_from_primitive(
            &Geometry::Box {
                size: Vec3::new(1.0, 1.0, 1.0),
            },
            64,
        )
        .unwrap();
        transform_mesh(&m, &Transform::from_xyz(x, 0.0, 0.0))
    }

    #[test]
    fn face_gap_between_cubes() {
        let r = min_distance(&cube_at(0.0), &cube_at(2.0), CONTACT_TOLERANCE).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-12);
        assert!(!r.contact);
        assert!(((r.witness_a - r.witness_b).norm() - r.distance).abs() < 1e-12);
    }

    #[test]
    fn touching_cubes_are_in_contact() {
        let r = min_distance(&cube_at(0.0), &cube_at(1.0), CONTACT_TOLERANCE).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.contact);
    }

    #[test]
    fn distance_is_symmetric() {
        let s = mesh_from_primitive(&Geometry::Sphere { radius: 0.4 }, 24).unwrap();
        let s = transform_mesh(&s, &Transform::new(Vec3::new(1.1, 0.9, -0.7), Vec3::new(0.3, 0.2, 0.1)));
        let c = cube_at(0.0);
        let ab = min_distance(&c, &s, 0.0).unwrap();
        let ba = min_distance(&s, &c, 0.0).unwrap();
        assert_eq!(ab.distance, ba.distance);
    }

    #[test]
    fn empty_mesh_rejected() {
        assert_eq!(
            min_distance(&TriMesh::default(), &cube_at(0.0), 0.0).unwrap_err(),
            GeometryError::EmptyMesh
        );
    }

    #[test]
    fn crossing_triangles_have_zero_distance() {
        let t1 = [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let t2 = [Vec3::new(0.0, 0.3, -1.0), Vec3::new(0.0, 0.3, 1.0), Vec3::new(0.2, 2.0, 0.0)];
        assert_eq!(triangle_distance(&t1, &t2).0, 0.0);
    }

    #[test]
    fn point_to_surface() {
        let c = cube_at(0.0);
        let bvh = Bvh::build(&c);
        assert!((point_mesh_distance(&bvh, &Vec3::new(0.1, 0.0, 0.0)) - 0.4).abs() < 1e-15);
        assert!((point_mesh_distance(&bvh, &Vec3::new(2.0, 0.0, 0.0)) - 1.5).abs() < 1e-15);
    }
}
