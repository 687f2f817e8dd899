//! Articulated asset kernel.

pub mod assets;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod lang;
pub mod math;
pub mod model;
pub mod urdf;
pub mod validation;

pub use geometry::{Aabb, GeometryError, TriMesh};
pub use math::{Frame, Mat3, Transform, Vec3};
pub use model::{ArticulatedObject, Articulation, Geometry, Inertial, JointType, ModelError, Part};

/// Lowercase hex SHA-256 of `data`.
pub fn sha256_hex(data: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(data))
}
