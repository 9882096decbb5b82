use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper end of the aperture range used for sampling and validation.
pub const MAX_APERTURE: f64 = 100.0;

/// Aperture level and focus point (the sharpest pixel of the frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureSpec<T> {
    pub alpha: T,
    pub focus_u: T,
    pub focus_v: T,
}

impl<T: Real> ApertureSpec<T> {
    pub fn new(alpha: T, focus_u: T, focus_v: T) -> Self {
        Self {
            alpha,
            focus_u,
            focus_v,
        }
    }

    /// Zero aperture focused on the principal point.
    pub fn pinhole(intr: &CameraIntrinsics<T>) -> Self {
        Self::new(T::zero(), intr.cx, intr.cy)
    }

    pub fn validate(&self, intr: &CameraIntrinsics<T>) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "aperture must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        let w = T::lit(intr.width as f64);
        let h = T::lit(intr.height as f64);
        let inside = self.focus_u >= T::zero()
            && self.focus_u < w
            && self.focus_v >= T::zero()
            && self.focus_v < h;
        if !inside {
            return Err(Error::InvalidParameter(format!(
                "focus point ({}, {}) outside {}x{} frame",
                self.focus_u, self.focus_v, intr.width, intr.height
            )));
        }
        Ok(())
    }

    /// Aperture map entry at `(u, v)` with the plain logistic `σ(α)`.
    pub fn map_value(&self, u: T, v: T) -> Vector3<T> {
        self.map_value_scaled(u, v, T::one())
    }

    /// `[u − u_in, v − v_in, ‖(u, v) − (u_in, v_in)‖^(1/σ(scale·α))]`.
    ///
    /// `scale` pre-multiplies α before the sigmoid; with `scale = 1` σ is
    /// already saturated for α above roughly 10.
    pub fn map_value_scaled(&self, u: T, v: T, scale: T) -> Vector3<T> {
        let du = u - self.focus_u;
        let dv = v - self.focus_v;
        let dist = (du * du + dv * dv).sqrt();
        let exponent = T::one() / sigmoid(scale * self.alpha);
        let third = if dist.is_zero() {
            T::zero()
        } else {
            dist.powf(exponent)
        };
        Vector3::new(du, dv, third)
    }

    pub fn cast<U: Real>(&self) -> ApertureSpec<U> {
        ApertureSpec {
            alpha: U::lit(self.alpha.to_f64_lossy()),
            focus_u: U::lit(self.focus_u.to_f64_lossy()),
            focus_v: U::lit(self.focus_v.to_f64_lossy()),
        }
    }
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Free-function form of [`ApertureSpec::map_value`].
pub fn aperture_map_value<T: Real>(u: T, v: T, spec: &ApertureSpec<T>) -> Vector3<T> {
    spec.map_value(u, v)
}
