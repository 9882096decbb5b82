use nalgebra::{Matrix3, Vector2, Vector3};

use super::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum camera-frame depth accepted by [`project`].
pub const MIN_DEPTH: f64 = 1e-9;

/// Extrinsics `[R | t]` mapping world points into the camera frame:
/// `x_cam = R · X + t`. The camera center is `O = −Rᵀ t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> CameraPose<T> {
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Orthonormality tolerance: 1e-9 in double precision, scaled with the
    /// machine epsilon for narrower types.
    pub fn tolerance() -> T {
        T::lit(1e-9).max(T::epsilon() * T::lit(1e4))
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        if !r.iter().chain(self.translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("pose must be finite".into()));
        }
        let tol = Self::tolerance();
        let rtr = r.transpose() * r;
        let ortho = (rtr - Matrix3::identity()).iter().all(|e| e.abs() <= tol);
        let det = det3(r);
        if !ortho || (det - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "rotation is not a proper orthonormal matrix (det = {det})"
            )));
        }
        Ok(())
    }

    /// Camera center in world coordinates, `−Rᵀ t`.
    #[inline]
    pub fn center(&self) -> Vector3<T> {
        -(self.rotation.transpose() * self.translation)
    }

    /// The inverse transform `[Rᵀ | −Rᵀ t]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn transform(&self, x: &Vector3<T>) -> Vector3<T> {
        self.rotation * x + self.translation
    }

    pub fn cast<U: Real>(&self) -> CameraPose<U> {
        CameraPose {
            rotation: self.rotation.map(|v| U::lit(v.to_f64_lossy())),
            translation: self.translation.map(|v| U::lit(v.to_f64_lossy())),
        }
    }
}

impl<T: Real> Default for CameraPose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn det3<T: Real>(m: &Matrix3<T>) -> T {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Rotation about the camera y axis by `angle` radians.
pub fn yaw<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    let (z, o) = (T::zero(), T::one());
    Matrix3::new(c, z, s, z, o, z, -s, z, c)
}

/// Rotation angle of `r` in degrees.
pub fn rotation_angle_deg<T: Real>(r: &Matrix3<T>) -> T {
    rotation_distance_deg(r, &Matrix3::identity())
}

/// Angle of `a bᵀ` in degrees from the chord `‖a − b‖_F = 2√2 sin(θ/2)`.
/// Exactly zero for equal inputs and well conditioned at small angles.
pub fn rotation_distance_deg<T: Real>(a: &Matrix3<T>, b: &Matrix3<T>) -> T {
    let d = a - b;
    let chord = d.component_mul(&d).sum().sqrt();
    let half = (chord / T::lit(8f64.sqrt())).min(T::one());
    (T::lit(2.0) * half.asin()).to_degrees()
}

/// Pinhole projection of a world point.
pub fn project<T: Real>(
    point: &Vector3<T>,
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
) -> Result<Vector2<T>> {
    let xc = pose.transform(point);
    if !(xc.z > T::lit(MIN_DEPTH)) {
        return Err(Error::BehindCamera {
            depth: xc.z.to_f64_lossy(),
        });
    }
    Ok(Vector2::new(
        intr.fx * xc.x / xc.z + intr.cx,
        intr.fy * xc.y / xc.z + intr.cy,
    ))
}
