//! Uniform-density mass properties: closed forms for primitives and
//! signed-tetrahedron integrals for closed meshes.

use std::f64::consts::PI;

use super::{watertight_check, GeometryError, TriMesh};
use crate::math::{Mat3, Vec3};
use crate::model::{Geometry, Inertial};

/// Either a geometry description or an explicit mesh.
pub enum MassSource<'a> {
    Geometry(&'a Geometry),
    Mesh(&'a TriMesh),
}

pub fn mass_properties(source: MassSource<'_>, mass: f64) -> Result<Inertial, GeometryError> {
    match source {
        MassSource::Geometry(g) => primitive_mass_properties(g, mass),
        MassSource::Mesh(m) => mesh_mass_properties(m, mass),
    }
}

fn check_mass(mass: f64) -> Result<(), GeometryError> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidMass(mass))
    }
}

fn diag(x: f64, y: f64, z: f64) -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(x, y, z))
}

/// Center and tensor about the center, in the geometry's own frame.
/// Procedural geometry falls back to its default-resolution mesh.
pub fn primitive_mass_properties(geometry: &Geometry, mass: f64) -> Result<Inertial, GeometryError> {
    check_mass(mass)?;
    geometry
        .validate()
        .map_err(|e| GeometryError::InvalidGeometry(e.to_string()))?;
    let centered = |inertia: Mat3| Inertial {
        mass,
        center: Vec3::zeros(),
        inertia,
    };
    Ok(match geometry {
        Geometry::Box { size } => {
            let (a2, b2, c2) = (size.x * size.x, size.y * size.y, size.z * size.z);
            centered(diag(mass * (b2 + c2) / 12.0, mass * (a2 + c2) / 12.0, mass * (a2 + b2) / 12.0))
        }
        Geometry::Cylinder { radius, length } => {
            let r2 = radius * radius;
            let side = mass * (3.0 * r2 + length * length) / 12.0;
            centered(diag(side, side, 0.5 * mass * r2))
        }
        Geometry::Sphere { radius } => {
            let i = 0.4 * mass * radius * radius;
            centered(diag(i, i, i))
        }
        Geometry::Cone {
            r_bottom,
            r_top,
            length,
        } => frustum(*r_bottom, *r_top, *length, mass),
        Geometry::Capsule { radius, length } => {
            let (r, l) = (*radius, *length);
            let v_cyl = PI * r * r * l;
            let v_sph = 4.0 / 3.0 * PI * r * r * r;
            let m_cyl = mass * v_cyl / (v_cyl + v_sph);
            let m_sph = mass - m_cyl;
            let izz = 0.5 * m_cyl * r * r + 0.4 * m_sph * r * r;
            let side = m_cyl * (3.0 * r * r + l * l) / 12.0
                + m_sph * (0.4 * r * r + 0.25 * l * l + 0.375 * l * r);
            centered(diag(side, side, izz))
        }
        Geometry::Procedural(p) => {
            let mesh = p.mesh(super::DEFAULT_TESSELLATION)?;
            mesh_mass_properties(&mesh, mass)?
        }
    })
}

/// Solid of revolution with radius varying linearly from `a` at the bottom
/// (z = -L/2) to `b` at the top; polynomial moments of r(h) = a + (b-a) h/L.
fn frustum(a: f64, b: f64, l: f64, mass: f64) -> Inertial {
    let d = b - a;
    let area = a * a + a * d + d * d / 3.0; // ∫ r² dt, t ∈ [0,1]
    let first = a * a / 2.0 + 2.0 * a * d / 3.0 + d * d / 4.0; // ∫ t r² dt
    let second = a * a / 3.0 + a * d / 2.0 + d * d / 5.0; // ∫ t² r² dt
    let quartic = a.powi(4) + 2.0 * a.powi(3) * d + 2.0 * a * a * d * d + a * d.powi(3) + d.powi(4) / 5.0;
    let volume = PI * l * area;
    let rho = mass / volume;
    let h_c = l * first / area;
    let izz = 0.5 * rho * PI * l * quartic;
    let i_base = rho * PI * (l * quartic / 4.0 + l * l * l * second);
    let side = i_base - mass * h_c * h_c;
    Inertial {
        mass,
        center: Vec3::new(0.0, 0.0, -l / 2.0 + h_c),
        inertia: diag(side, side, izz),
    }
}

/// Mass properties of a closed, outward-wound mesh at uniform density.
pub fn mesh_mass_properties(mesh: &TriMesh, mass: f64) -> Result<Inertial, GeometryError> {
    check_mass(mass)?;
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    if !watertight_check(mesh).closed {
        return Err(GeometryError::NonWatertight);
    }
    let canonical = Mat3::new(2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) / 120.0;
    let mut volume = 0.0;
    let mut first = Vec3::zeros();
    let mut cov = Mat3::zeros();
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        let det = a.dot(&b.cross(&c));
        let m = Mat3::from_columns(&[a, b, c]);
        volume += det / 6.0;
        first += (a + b + c) * (det / 24.0);
        cov += m * canonical * m.transpose() * det;
    }
    if !(volume.is_finite() && volume > 0.0) {
        return Err(GeometryError::InvalidMesh("mesh encloses no positive volume".into()));
    }
    let center = first / volume;
    let cov_c = cov - center * center.transpose() * volume;
    let rho = mass / volume;
    let inertia = (Mat3::identity() * cov_c.trace() - cov_c) * rho;
    Ok(Inertial {
        mass,
        center,
        inertia: (inertia + inertia.transpose()) * 0.5,
    })
}
