use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pinhole intrinsics with the frame size they apply to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Square pixels with the principal point at the frame center `(W/2, H/2)`.
    pub fn centered(focal: T, width: usize, height: usize) -> Result<Self> {
        let cx = T::lit(width as f64 / 2.0);
        let cy = T::lit(height as f64 / 2.0);
        Self::new(focal, focal, cx, cy, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "intrinsics must be finite".to_string(),
            ));
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidParameter(format!(
                "frame must be at least 2x2, got {}x{}",
                self.width, self.height
            )));
        }
        let w = T::lit(self.width as f64);
        let h = T::lit(self.height as f64);
        if !(self.cx >= T::zero() && self.cx < w && self.cy >= T::zero() && self.cy < h) {
            return Err(Error::InvalidParameter(format!(
                "principal point ({}, {}) outside {}x{} frame",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, z, self.cx, z, self.fy, self.cy, z, z, o)
    }

    #[inline]
    pub fn principal_point(&self) -> Vector2<T> {
        Vector2::new(self.cx, self.cy)
    }

    /// Distance from the principal point to the farthest frame corner.
    ///
    /// Radial distortion works on radii divided by this value, so the
    /// normalized radius is 1 at the extreme corner. For a centered principal
    /// point it is the half-diagonal.
    pub fn normalization_radius(&self) -> T {
        let w = T::lit(self.width as f64);
        let h = T::lit(self.height as f64);
        let dx = self.cx.max(w - self.cx);
        let dy = self.cy.max(h - self.cy);
        (dx * dx + dy * dy).sqrt()
    }

    /// Same camera with both focal lengths multiplied by `s`.
    pub fn with_zoom(&self, s: T) -> Self {
        Self {
            fx: self.fx * s,
            fy: self.fy * s,
            ..*self
        }
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        CameraIntrinsics {
            fx: U::lit(self.fx.to_f64_lossy()),
            fy: U::lit(self.fy.to_f64_lossy()),
            cx: U::lit(self.cx.to_f64_lossy()),
            cy: U::lit(self.cy.to_f64_lossy()),
            width: self.width,
            height: self.height,
        }
    }
}
