//! Closed, outward-wound meshes for the primitive geometry variants.
//!
//! Every curved primitive is a surface of revolution about +z, centered on the
//! origin, with vertices inscribed in the exact surface.

use std::f64::consts::PI;

use super::{GeometryError, TriMesh, MIN_TESSELLATION};
use crate::math::Vec3;
use crate::model::Geometry;

pub fn mesh_from_primitive(geometry: &Geometry, segments: usize) -> Result<TriMesh, GeometryError> {
    if segments < MIN_TESSELLATION {
        return Err(GeometryError::InvalidTessellation(segments));
    }
    geometry
        .validate()
        .map_err(|e| GeometryError::InvalidGeometry(e.to_string()))?;
    let mesh = match geometry {
        Geometry::Box { size } => box_mesh(*size),
        Geometry::Cylinder { radius, length } => {
            let h = length / 2.0;
            revolve(&[(*radius, h), (*radius, -h)], segments)
        }
        Geometry::Sphere { radius } => revolve(&sphere_profile(*radius, 0.0, segments), segments),
        Geometry::Cone {
            r_bottom,
            r_top,
            length,
        } => {
            let h = length / 2.0;
            revolve(&[(*r_top, h), (*r_bottom, -h)], segments)
        }
        Geometry::Capsule { radius, length } => capsule_mesh(*radius, *length, segments),
        Geometry::Procedural(_) => {
            return Err(GeometryError::InvalidGeometry(
                "procedural geometry is not a primitive".into(),
            ))
        }
    };
    Ok(mesh)
}

/// Axis-aligned box centered on the origin.
pub fn box_mesh(size: Vec3) -> TriMesh {
    let h = size / 2.0;
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8 {
        let sx = if i & 1 == 0 { -h.x } else { h.x };
        let sy = if i & 2 == 0 { -h.y } else { h.y };
        let sz = if i & 4 == 0 { -h.z } else { h.z };
        vertices.push(Vec3::new(sx, sy, sz));
    }
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriMesh::new(vertices, triangles)
}

fn sphere_profile(radius: f64, z_center: f64, segments: usize) -> Vec<(f64, f64)> {
    let stacks = segments.div_ceil(2);
    (0..=stacks)
        .map(|i| {
            let phi = PI * i as f64 / stacks as f64;
            if i == 0 {
                (0.0, z_center + radius)
            } else if i == stacks {
                (0.0, z_center - radius)
            } else {
                (radius * phi.sin(), z_center + radius * phi.cos())
            }
        })
        .collect()
}

fn capsule_mesh(radius: f64, length: f64, segments: usize) -> TriMesh {
    let h = length / 2.0;
    let stacks = segments.div_ceil(4);
    let mut profile = Vec::with_capacity(2 * stacks + 2);
    for i in 0..=stacks {
        let phi = 0.5 * PI * i as f64 / stacks as f64;
        let r = if i == 0 { 0.0 } else { radius * phi.sin() };
        profile.push((r, h + radius * phi.cos()));
    }
    for i in 0..=stacks {
        let phi = 0.5 * PI * i as f64 / stacks as f64;
        let r = if i == stacks { 0.0 } else { radius * phi.cos() };
        profile.push((r, -h - radius * phi.sin()));
    }
    revolve(&profile, segments)
}

/// Unit directions around +z, exactly symmetric under quarter turns when the
/// segment count is a multiple of four.
pub(crate) fn ring_directions(segments: usize) -> Vec<(f64, f64)> {
    if segments.is_multiple_of(4) {
        let q = segments / 4;
        let base: Vec<(f64, f64)> = (0..q)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / segments as f64;
                (a.cos(), a.sin())
            })
            .collect();
        let mut out = Vec::with_capacity(segments);
        for quadrant in 0..4 {
            for &(c, s) in &base {
                out.push(match quadrant {
                    0 => (c, s),
                    1 => (-s, c),
                    2 => (-c, -s),
                    _ => (s, -c),
                });
            }
        }
        out
    } else {
        (0..segments)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / segments as f64;
                (a.cos(), a.sin())
            })
            .collect()
    }
}

/// Revolves an open profile of `(radius, z)` points, ordered from top to
/// bottom, about +z. End points with zero radius become poles; others get a
/// flat cap.
pub fn revolve(profile: &[(f64, f64)], segments: usize) -> TriMesh {
    let dirs = ring_directions(segments);
    let n = segments as u32;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    // ring index -> either a single pole vertex or a ring start
    enum Ring {
        Pole(u32),
        Loop(u32),
    }
    let rings: Vec<Ring> = profile
        .iter()
        .map(|&(r, z)| {
            let start = vertices.len() as u32;
            if r == 0.0 {
                vertices.push(Vec3::new(0.0, 0.0, z));
                Ring::Pole(start)
            } else {
                vertices.extend(dirs.iter().map(|&(c, s)| Vec3::new(r * c, r * s, z)));
                Ring::Loop(start)
            }
        })
        .collect();

    if let Ring::Loop(start) = rings[0] {
        let c = vertices.len() as u32;
        vertices.push(Vec3::new(0.0, 0.0, profile[0].1));
        for k in 0..n {
            triangles.push([c, start + k, start + (k + 1) % n]);
        }
    }
    for pair in rings.windows(2) {
        match (&pair[0], &pair[1]) {
            (Ring::Pole(p), Ring::Loop(l)) => {
                for k in 0..n {
                    triangles.push([*p, l + k, l + (k + 1) % n]);
                }
            }
            (Ring::Loop(u), Ring::Pole(p)) => {
                for k in 0..n {
                    triangles.push([*p, u + (k + 1) % n, u + k]);
                }
            }
            (Ring::Loop(u), Ring::Loop(l)) => {
                for k in 0..n {
                    let k1 = (k + 1) % n;
                    triangles.push([u + k, l + k, l + k1]);
                    triangles.push([u + k, l + k1, u + k1]);
                }
            }
            (Ring::Pole(_), Ring::Pole(_)) => {}
        }
    }
    if let Some(Ring::Loop(start)) = rings.last() {
        let c = vertices.len() as u32;
        vertices.push(Vec3::new(0.0, 0.0, profile[profile.len() - 1].1));
        for k in 0..n {
            triangles.push([c, start + (k + 1) % n, start + k]);
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Revolves a closed profile loop (all radii positive) about +z. Walk the loop
/// down the outer side first so the surface comes out outward-wound.
pub fn revolve_closed(profile: &[(f64, f64)], segments: usize) -> TriMesh {
    let dirs = ring_directions(segments);
    let n = segments as u32;
    let mut vertices = Vec::with_capacity(profile.len() * segments);
    for &(r, z) in profile {
        vertices.extend(dirs.iter().map(|&(c, s)| Vec3::new(r * c, r * s, z)));
    }
    let m = profile.len() as u32;
    let mut triangles = Vec::new();
    for i in 0..m {
        let u = i * n;
        let l = ((i + 1) % m) * n;
        for k in 0..n {
            let k1 = (k + 1) % n;
            triangles.push([u + k, l + k, l + k1]);
            triangles.push([u + k, l + k1, u + k1]);
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Hollow cylinder between `inner` and `outer` radius, height `length`.
pub fn annulus(inner: f64, outer: f64, length: f64, segments: usize) -> TriMesh {
    let h = length / 2.0;
    revolve_closed(&[(outer, h), (outer, -h), (inner, -h), (inner, h)], segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::watertight_check;

    fn all_primitives() -> Vec<(Geometry, f64)> {
        vec![
            (
                Geometry::Box {
                    size: Vec3::new(0.3, 0.5, 0.7),
                },
                0.3 * 0.5 * 0.7,
            ),
            (
                Geometry::Cylinder {
                    radius: 0.5,
                    length: 2.0,
                },
                PI * 0.25 * 2.0,
            ),
            (Geometry::Sphere { radius: 1.0 }, 4.0 / 3.0 * PI),
            (
                Geometry::Cone {
                    r_bottom: 0.4,
                    r_top: 0.1,
                    length: 0.6,
                },
                PI * 0.6 / 3.0 * (0.16 + 0.04 + 0.01),
            ),
            (
                Geometry::Cone {
                    r_bottom: 0.4,
                    r_top: 0.0,
                    length: 0.6,
                },
                PI * 0.6 / 3.0 * 0.16,
            ),
            (
                Geometry::Capsule {
                    radius: 0.2,
                    length: 0.5,
                },
                PI * 0.04 * 0.5 + 4.0 / 3.0 * PI * 0.008,
            ),
        ]
    }

    #[test]
    fn unit_cube_counts() {
        let m = mesh_from_primitive(
            &Geometry::Box {
                size: Vec3::new(1.0, 1.0, 1.0),
            },
            64,
        )
        .unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
        assert!((m.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn primitives_are_closed_and_close_to_analytic_volume() {
        for (g, analytic) in all_primitives() {
            let m = mesh_from_primitive(&g, 64).unwrap();
            m.validate().unwrap();
            let r = watertight_check(&m);
            assert!(r.closed, "{g:?}");
            assert_eq!(r.inconsistent_edges, 0, "{g:?}");
            assert_eq!(r.euler_characteristic, 2, "{g:?}");
            let rel = (m.volume() - analytic).abs() / analytic;
            assert!(rel < 0.005, "{g:?}: rel err {rel}");
        }
    }

    #[test]
    fn volume_error_shrinks_with_each_doubling() {
        for (g, analytic) in all_primitives().into_iter().skip(1) {
            let errs: Vec<f64> = [8, 16, 32, 64]
                .iter()
                .map(|&n| (mesh_from_primitive(&g, n).unwrap().volume() - analytic).abs())
                .collect();
            for w in errs.windows(2) {
                assert!(w[1] < w[0], "{g:?}: {errs:?}");
            }
        }
    }

    #[test]
    fn coarse_tessellation_rejected() {
        let err = mesh_from_primitive(&Geometry::Sphere { radius: 1.0 }, 4).unwrap_err();
        assert_eq!(err, GeometryError::InvalidTessellation(4));
    }

    #[test]
    fn annulus_is_closed_torus() {
        let m = annulus(0.2, 0.5, 0.1, 32);
        let r = watertight_check(&m);
        assert!(r.closed);
        assert_eq!(r.euler_characteristic, 0);
        let expected = PI * (0.25 - 0.04) * 0.1;
        assert!((m.volume() - expected).abs() / expected < 0.01);
    }
}
