//! Small linear-algebra vocabulary shared by every module.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Authored placement: translation in meters plus fixed-axis roll/pitch/yaw in
/// radians (rotation applied about X, then Y, then Z of the parent frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub xyz: Vec3,
    pub rpy: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            xyz: Vec3::zeros(),
            rpy: Vec3::zeros(),
        }
    }

    pub fn new(xyz: Vec3, rpy: Vec3) -> Self {
        Self { xyz, rpy }
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vec3::new(x, y, z), Vec3::zeros())
    }

    pub fn is_identity(&self) -> bool {
        self.xyz == Vec3::zeros() && self.rpy == Vec3::zeros()
    }

    pub fn rotation(&self) -> Mat3 {
        rpy_matrix(self.rpy)
    }

    pub fn to_frame(&self) -> Frame {
        Frame {
            rotation: self.rotation(),
            translation: self.xyz,
        }
    }

    /// Composition as frames; the result's rpy is re-extracted from the
    /// rotation product.
    pub fn compose(&self, other: &Transform) -> Transform {
        self.to_frame().compose(&other.to_frame()).to_transform()
    }
}

/// `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rpy_matrix(rpy: Vec3) -> Mat3 {
    Rotation3::from_euler_angles(rpy.x, rpy.y, rpy.z).into_inner()
}

/// Rotation of `angle` radians about a unit axis.
pub fn axis_angle_matrix(axis: Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let (x, y, z) = (axis.x, axis.y, axis.z);
    Mat3::new(
        t * x * x + c,
        t * x * y - s * z,
        t * x * z + s * y,
        t * x * y + s * z,
        t * y * y + c,
        t * y * z - s * x,
        t * x * z - s * y,
        t * y * z + s * x,
        t * z * z + c,
    )
}

/// A rigid frame: rotation matrix plus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Frame {
    fn default() -> Self {
        Self::identity()
    }
}

impl Frame {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    pub fn from_rotation(r: Mat3) -> Self {
        Self {
            rotation: r,
            translation: Vec3::zeros(),
        }
    }

    /// `self ∘ other`: express `other` (given in self's frame) in self's parent.
    pub fn compose(&self, other: &Frame) -> Frame {
        Frame {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Frame {
        let rt = self.rotation.transpose();
        Frame {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Homogeneous 4x4 matrix, row-major entries.
    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn to_transform(&self) -> Transform {
        let (roll, pitch, yaw) = Rotation3::from_matrix_unchecked(self.rotation).euler_angles();
        Transform {
            xyz: self.translation,
            rpy: Vec3::new(roll, pitch, yaw),
        }
    }
}
