use nalgebra::Vector3;

use super::distortion::distort_unchecked;
use super::{CameraIntrinsics, CameraPose, Distortion};
use crate::scalar::Real;

/// Plücker coordinates of a pixel ray: unit direction and moment about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerRay<T: Real> {
    pub direction: Vector3<T>,
    pub moment: Vector3<T>,
}

/// Ray through pixel `(u, v)` of a distorted pinhole camera.
///
/// The pixel is first moved by the radial distortion, back-projected through
/// `K⁻¹` and rotated into the world frame with `Rᵀ`. The direction is
/// normalized before the moment `O × d` is formed with the camera center `O`.
pub fn plucker_ray<T: Real>(
    u: T,
    v: T,
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
    dist: &Distortion<T>,
) -> PluckerRay<T> {
    let p = distort_unchecked(u, v, intr, dist);
    ray_through(p.x, p.y, pose, intr, &pose.center())
}

/// Same as [`plucker_ray`] with no distortion step at all.
pub fn plucker_ray_pinhole<T: Real>(
    u: T,
    v: T,
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
) -> PluckerRay<T> {
    ray_through(u, v, pose, intr, &pose.center())
}

#[inline]
pub(crate) fn ray_through<T: Real>(
    u: T,
    v: T,
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
    center: &Vector3<T>,
) -> PluckerRay<T> {
    let cam = Vector3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, T::one());
    let d = pose.rotation.tr_mul(&cam);
    let d = d / d.dot(&d).sqrt();
    PluckerRay {
        direction: d,
        moment: center.cross(&d),
    }
}
