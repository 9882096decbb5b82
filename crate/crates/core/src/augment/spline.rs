//! Smooth per-frame parameter trajectories.
//!
//! `K` control values are drawn uniformly in `[lo, hi]` at knots spread
//! evenly over the frame indices `0..N`, a natural cubic spline is passed
//! through them and evaluated at every frame, then clamped to `[lo, hi]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidParameter(format!(
                "spline needs at least two knots with one value each ({} knots, {} values)",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let (h0, h1) = (knots[i + 1] - knots[i], knots[i + 2] - knots[i + 1]);
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0
                    * ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            knots,
            values,
            second,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let t = (x - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        y0 + t * (y1 - y0) - h * h * t * (1.0 - t) / 6.0 * ((2.0 - t) * m0 + (1.0 + t) * m1)
    }
}

/// Evaluates the clamped spline through given control values at `n` frames.
pub fn spline_through_controls(controls: &[f64], n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_args(n, controls.len(), lo, hi)?;
    let k = controls.len();
    let span = (n - 1) as f64;
    let knots = (0..k).map(|j| j as f64 * span / (k - 1) as f64).collect();
    let spline = NaturalCubicSpline::new(knots, controls.to_vec())?;
    Ok((0..n)
        .map(|i| spline.eval(i as f64).clamp(lo, hi))
        .collect())
}

pub fn sample_spline_with_rng<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    lo: f64,
    hi: f64,
    knots: usize,
) -> Result<Vec<f64>> {
    check_args(n, knots, lo, hi)?;
    let controls: Vec<f64> = (0..knots).map(|_| rng.random_range(lo..=hi)).collect();
    spline_through_controls(&controls, n, lo, hi)
}

/// Seeded form of [`sample_spline_with_rng`].
pub fn sample_spline_trajectory(
    seed: u64,
    n: usize,
    range: (f64, f64),
    knots: usize,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_spline_with_rng(&mut rng, n, range.0, range.1, knots)
}

fn check_args(n: usize, knots: usize, lo: f64, hi: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 frames, got {n}")));
    }
    if knots < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 control points, got {knots}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("bad range [{lo}, {hi}]")));
    }
    Ok(())
}
