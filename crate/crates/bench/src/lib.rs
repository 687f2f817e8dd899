//! Shared fixtures for the benchmarks.

use jointsmith_core::geometry::mesh_for_geometry;
use jointsmith_core::{Frame, Geometry, TriMesh, Vec3};

/// A sphere and a rotated box a few millimetres apart, at `segments` resolution.
pub fn near_pair(segments: usize) -> (TriMesh, TriMesh) {
    let a = mesh_for_geometry(&Geometry::Sphere { radius: 0.1 }, segments).expect("valid sphere");
    let b = mesh_for_geometry(&Geometry::Box { size: Vec3::new(0.1, 0.2, 0.05) }, segments)
        .expect("valid box")
        .transformed(&Frame::from_translation(Vec3::new(0.155, 0.02, 0.0)));
    (a, b)
}

/// Two cylinders crossing at right angles.
pub fn crossing_pair(segments: usize) -> (TriMesh, TriMesh) {
    let g = Geometry::Cylinder { radius: 0.05, length: 0.4 };
    let a = mesh_for_geometry(&g, segments).expect("valid cylinder");
    let rot = jointsmith_core::math::rpy_matrix(Vec3::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0));
    let b = mesh_for_geometry(&g, segments).expect("valid cylinder").transformed(&Frame::from_rotation(rot));
    (a, b)
}
