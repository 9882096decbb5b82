//! Three-coefficient radial distortion on normalized, center-relative pixel
//! coordinates.
//!
//! A pixel `p` is mapped to `c + (p - c) * (1 + k1 r² + k2 r⁴ + k3 r⁶)` where
//! `c` is the principal point and `r = |p - c| / R` with `R` the
//! [normalization radius](super::CameraIntrinsics::normalization_radius), so
//! that `r = 1` at the farthest corner.
//!
//! In radius space the map is `g(r) = r (1 + k1 r² + k2 r⁴ + k3 r⁶)`. It is
//! invertible on the frame while `g` is strictly increasing, which is what
//! [`Distortion::is_radius_monotone`] checks over `r ∈ [0, 1]`.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Training range of each coefficient used by the augmentation sampler.
pub const TRAINING_RANGE: (f64, f64) = (-0.1, 0.1);

/// Maximum Newton iterations used by [`undistort_pixel`].
pub const MAX_INVERSION_ITERATIONS: usize = 50;

// Search limit for the monotone branch of g, in normalized radius.
const BRANCH_SEARCH_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Distortion<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
}

impl<T: Real> Distortion<T> {
    pub fn new(k1: T, k2: T, k3: T) -> Result<Self> {
        let d = Self { k1, k2, k3 };
        if !d.coefficients().iter().all(|k| k.is_finite()) {
            return Err(Error::InvalidParameter(
                "distortion coefficients must be finite".into(),
            ));
        }
        if !d.in_training_range() {
            log::warn!(
                "distortion ({}, {}, {}) outside the training range [{}, {}]",
                k1,
                k2,
                k3,
                TRAINING_RANGE.0,
                TRAINING_RANGE.1
            );
        }
        Ok(d)
    }

    pub fn zero() -> Self {
        Self {
            k1: T::zero(),
            k2: T::zero(),
            k3: T::zero(),
        }
    }

    pub fn from_array(k: [T; 3]) -> Self {
        Self {
            k1: k[0],
            k2: k[1],
            k3: k[2],
        }
    }

    #[inline]
    pub fn coefficients(&self) -> [T; 3] {
        [self.k1, self.k2, self.k3]
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().iter().all(|k| k.is_zero())
    }

    pub fn in_training_range(&self) -> bool {
        let (lo, hi) = (T::lit(TRAINING_RANGE.0), T::lit(TRAINING_RANGE.1));
        self.coefficients().iter().all(|&k| k >= lo && k <= hi)
    }

    /// `1 + k1 r² + k2 r⁴ + k3 r⁶` given `r²`.
    #[inline]
    pub fn radial_factor(&self, r2: T) -> T {
        T::one() + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    /// `g(r) = r · factor(r²)`.
    #[inline]
    pub fn radius_map(&self, r: T) -> T {
        r * self.radial_factor(r * r)
    }

    /// `g'(r) = 1 + 3 k1 r² + 5 k2 r⁴ + 7 k3 r⁶`.
    #[inline]
    pub fn radius_map_derivative(&self, r: T) -> T {
        let x = r * r;
        let (c3, c5, c7) = (T::lit(3.0), T::lit(5.0), T::lit(7.0));
        T::one() + x * (c3 * self.k1 + x * (c5 * self.k2 + x * c7 * self.k3))
    }

    /// True when `g` is strictly increasing on `[0, 1]`.
    ///
    /// `g'` is a cubic in `x = r²`; its minimum over `[0, 1]` is at an end
    /// point or at a real root of its derivative `3 k1 + 10 k2 x + 21 k3 x²`.
    pub fn is_radius_monotone(&self) -> bool {
        let h = |x: f64| {
            let (k1, k2, k3) = (
                self.k1.to_f64_lossy(),
                self.k2.to_f64_lossy(),
                self.k3.to_f64_lossy(),
            );
            1.0 + 3.0 * k1 * x + 5.0 * k2 * x * x + 7.0 * k3 * x * x * x
        };
        let (a, b, c) = (
            21.0 * self.k3.to_f64_lossy(),
            10.0 * self.k2.to_f64_lossy(),
            3.0 * self.k1.to_f64_lossy(),
        );
        let mut candidates = vec![0.0, 1.0];
        if a.abs() > 1e-300 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                candidates.push((-b + sq) / (2.0 * a));
                candidates.push((-b - sq) / (2.0 * a));
            }
        } else if b.abs() > 1e-300 {
            candidates.push(-c / b);
        }
        candidates
            .into_iter()
            .filter(|x| (0.0..=1.0).contains(x))
            .all(|x| h(x) > 0.0)
    }

    /// Coefficients describing the same lens after a center zoom by `s`.
    ///
    /// Zooming maps normalized radius `r` to `r / s` on the source, so
    /// `k_j` becomes `k_j / s^(2j)`.
    pub fn zoomed(&self, s: T) -> Self {
        let s2 = s * s;
        Self {
            k1: self.k1 / s2,
            k2: self.k2 / (s2 * s2),
            k3: self.k3 / (s2 * s2 * s2),
        }
    }

    /// End of the monotone branch of `g` starting at 0 and the value of `g` there.
    pub fn monotone_branch(&self) -> (T, T) {
        let limit = T::lit(BRANCH_SEARCH_LIMIT);
        let steps = 4096;
        let dr = limit / T::lit(steps as f64);
        let mut prev = T::zero();
        for i in 1..=steps {
            let r = dr * T::lit(i as f64);
            if self.radius_map_derivative(r) <= T::zero() {
                // bisect between prev (g' > 0) and r (g' <= 0)
                let (mut lo, mut hi) = (prev, r);
                for _ in 0..80 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if self.radius_map_derivative(mid) > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return (lo, self.radius_map(lo));
            }
            prev = r;
        }
        (limit, self.radius_map(limit))
    }

    /// Solves `g(r) = rho` on the monotone branch.
    ///
    /// Safeguarded Newton: iterates stay inside a shrinking bracket, so the
    /// method cannot leave the branch.
    pub fn invert_radius(&self, rho: T, tolerance: T) -> Result<T> {
        self.invert_radius_on_branch(rho, tolerance, self.monotone_branch())
    }

    /// [`Self::invert_radius`] with a precomputed [`Self::monotone_branch`].
    pub fn invert_radius_on_branch(&self, rho: T, tolerance: T, branch: (T, T)) -> Result<T> {
        if rho <= T::zero() {
            return Ok(T::zero());
        }
        let (branch_end, g_end) = branch;
        if rho > g_end {
            return Err(Error::InversionFailure {
                iterations: 0,
                residual: (rho - g_end).to_f64_lossy(),
            });
        }
        let (mut lo, mut hi) = (T::zero(), branch_end);
        let mut r = rho.min(branch_end);
        let mut residual = self.radius_map(r) - rho;
        for _ in 0..MAX_INVERSION_ITERATIONS {
            if residual.abs() <= tolerance {
                return Ok(r);
            }
            if residual > T::zero() {
                hi = r;
            } else {
                lo = r;
            }
            let slope = self.radius_map_derivative(r);
            let mut next = r - residual / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = (lo + hi) * T::lit(0.5);
            }
            r = next;
            residual = self.radius_map(r) - rho;
        }
        if residual.abs() <= tolerance {
            return Ok(r);
        }
        Err(Error::InversionFailure {
            iterations: MAX_INVERSION_ITERATIONS,
            residual: residual.abs().to_f64_lossy(),
        })
    }

    pub fn cast<U: Real>(&self) -> Distortion<U> {
        Distortion {
            k1: U::lit(self.k1.to_f64_lossy()),
            k2: U::lit(self.k2.to_f64_lossy()),
            k3: U::lit(self.k3.to_f64_lossy()),
        }
    }
}

/// Applies the radial distortion to pixel `(u, v)`.
///
/// Returns the input unchanged whenever the radial factor is exactly one
/// (zero coefficients or the principal point).
pub fn distort_pixel<T: Real>(
    u: T,
    v: T,
    intr: &CameraIntrinsics<T>,
    dist: &Distortion<T>,
) -> Result<Vector2<T>> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite pixel ({u}, {v})"
        )));
    }
    Ok(distort_unchecked(u, v, intr, dist))
}

#[inline]
pub(crate) fn distort_unchecked<T: Real>(
    u: T,
    v: T,
    intr: &CameraIntrinsics<T>,
    dist: &Distortion<T>,
) -> Vector2<T> {
    let norm = intr.normalization_radius();
    let (du, dv) = (u - intr.cx, v - intr.cy);
    let r2 = (du * du + dv * dv) / (norm * norm);
    let factor = dist.radial_factor(r2);
    if factor == T::one() {
        return Vector2::new(u, v);
    }
    Vector2::new(intr.cx + du * factor, intr.cy + dv * factor)
}

/// Numerical inverse of [`distort_pixel`].
///
/// Fails with [`Error::InversionFailure`] when the pixel has no preimage on
/// the monotone branch of the radius map, or Newton does not converge within
/// [`MAX_INVERSION_ITERATIONS`].
pub fn undistort_pixel<T: Real>(
    u: T,
    v: T,
    intr: &CameraIntrinsics<T>,
    dist: &Distortion<T>,
) -> Result<Vector2<T>> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite pixel ({u}, {v})"
        )));
    }
    if dist.is_zero() {
        return Ok(Vector2::new(u, v));
    }
    let norm = intr.normalization_radius();
    let (du, dv) = (u - intr.cx, v - intr.cy);
    let rho_px = (du * du + dv * dv).sqrt();
    if rho_px.is_zero() {
        return Ok(Vector2::new(u, v));
    }
    let rho = rho_px / norm;
    // 1e-7 px in normalized units, but never below what the scalar can resolve.
    let tol = (T::lit(1e-7) / norm).max(T::epsilon() * T::lit(16.0) * rho.max(T::one()));
    let r = dist.invert_radius(rho, tol).map_err(|e| match e {
        Error::InversionFailure {
            iterations,
            residual,
        } => Error::InversionFailure {
            iterations,
            residual: residual * norm.to_f64_lossy(),
        },
        other => other,
    })?;
    let scale = r / rho;
    Ok(Vector2::new(intr.cx + du * scale, intr.cy + dv * scale))
}
