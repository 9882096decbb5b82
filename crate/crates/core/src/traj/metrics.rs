use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::trajectory::{PoseTrajectory, StampedPose};
use crate::camera::rotation_distance_deg;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Path lengths below this are treated as zero by [`scale_correct`].
pub const MIN_PATH_LENGTH: f64 = 1e-12;

/// How relative pose errors are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpeMode {
    /// Difference of consecutive translation deltas, and the angle of
    /// `ΔR̂ (ΔR*)ᵀ` with `ΔR = R_{i+1} R_iᵀ`.
    #[default]
    Delta,
    /// Full relative transform error `(T*_i⁻¹ T*_{i+1})⁻¹ (T̂_i⁻¹ T̂_{i+1})`.
    Se3,
}

/// Per-term errors with their means. Rotations are in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseErrors<T> {
    pub trans: T,
    pub rot_deg: T,
    pub trans_terms: Vec<T>,
    pub rot_terms: Vec<T>,
}

impl<T: Real> PoseErrors<T> {
    fn from_terms(trans_terms: Vec<T>, rot_terms: Vec<T>) -> Self {
        let mean = |v: &[T]| {
            if v.is_empty() {
                T::zero()
            } else {
                v.iter().fold(T::zero(), |a, &b| a + b) / T::lit(v.len() as f64)
            }
        };
        Self {
            trans: mean(&trans_terms),
            rot_deg: mean(&rot_terms),
            trans_terms,
            rot_terms,
        }
    }

    /// Indices whose translation or rotation term is nonzero.
    pub fn nonzero_terms(&self) -> Vec<usize> {
        (0..self.trans_terms.len())
            .filter(|&i| self.trans_terms[i] != T::zero() || self.rot_terms[i] != T::zero())
            .collect()
    }
}

/// Checks equal lengths and exactly matching timestamps.
pub fn check_matched<T: Real>(est: &PoseTrajectory<T>, reference: &PoseTrajectory<T>) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "estimate has {} poses, reference has {}",
            est.len(),
            reference.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::TrajectoryMismatch("trajectories are empty".into()));
    }
    for (i, (a, b)) in est.poses.iter().zip(&reference.poses).enumerate() {
        if a.timestamp != b.timestamp {
            return Err(Error::TrajectoryMismatch(format!(
                "timestamp mismatch at pose {i}: estimate {} vs reference {}",
                a.timestamp, b.timestamp
            )));
        }
    }
    Ok(())
}

/// Absolute pose error: mean position distance and mean angle of `R̂ R*ᵀ`.
pub fn ape<T: Real>(est: &PoseTrajectory<T>, reference: &PoseTrajectory<T>) -> Result<PoseErrors<T>> {
    check_matched(est, reference)?;
    let (trans, rot) = est
        .poses
        .iter()
        .zip(&reference.poses)
        .map(|(e, r)| {
            (
                super::norm3(&(e.position - r.position)),
                rotation_distance_deg(&e.rotation, &r.rotation),
            )
        })
        .unzip();
    Ok(PoseErrors::from_terms(trans, rot))
}

fn relative_se3<T: Real>(a: &StampedPose<T>, b: &StampedPose<T>) -> (Matrix3<T>, Vector3<T>) {
    // a⁻¹ b for camera-to-world poses
    let rt = a.rotation.transpose();
    (rt * b.rotation, rt * (b.position - a.position))
}

/// Relative pose error over consecutive pairs.
pub fn rpe<T: Real>(
    est: &PoseTrajectory<T>,
    reference: &PoseTrajectory<T>,
    mode: RpeMode,
) -> Result<PoseErrors<T>> {
    check_matched(est, reference)?;
    if est.len() < 2 {
        return Err(Error::TrajectoryMismatch("relative errors need at least 2 poses".into()));
    }
    let pairs = est.poses.windows(2).zip(reference.poses.windows(2));
    let (trans, rot) = match mode {
        RpeMode::Delta => pairs
            .map(|(e, r)| {
                let dt_e = e[1].position - e[0].position;
                let dt_r = r[1].position - r[0].position;
                let dr_e = e[1].rotation * e[0].rotation.transpose();
                let dr_r = r[1].rotation * r[0].rotation.transpose();
                (
                    super::norm3(&(dt_e - dt_r)),
                    rotation_distance_deg(&dr_e, &dr_r),
                )
            })
            .unzip(),
        RpeMode::Se3 => pairs
            .map(|(e, r)| {
                let (re, te) = relative_se3(&e[0], &e[1]);
                let (rr, tr) = relative_se3(&r[0], &r[1]);
                // (rr, tr)⁻¹ ∘ (re, te)
                let err_t = rr.transpose() * (te - tr);
                (super::norm3(&err_t), rotation_distance_deg(&re, &rr))
            })
            .unzip(),
    };
    Ok(PoseErrors::from_terms(trans, rot))
}

/// Ratio `‖T*‖ / ‖T̂‖` of path lengths.
pub fn scale_ratio<T: Real>(est: &PoseTrajectory<T>, reference: &PoseTrajectory<T>) -> Result<T> {
    let le = est.path_length();
    if !(le > T::lit(MIN_PATH_LENGTH)) {
        return Err(Error::DegenerateTrajectory(format!(
            "estimated path length {le} is too short to rescale"
        )));
    }
    Ok(reference.path_length() / le)
}

/// Rescales the estimate's positions so its path length matches the
/// reference. Rotations are untouched.
pub fn scale_correct<T: Real>(est: &PoseTrajectory<T>, reference: &PoseTrajectory<T>) -> Result<PoseTrajectory<T>> {
    Ok(est.scaled(scale_ratio(est, reference)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub scale_correct: bool,
    pub mode: RpeMode,
    pub include_ape: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            scale_correct: true,
            mode: RpeMode::Delta,
            include_ape: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub index: usize,
    pub trans: f64,
    pub rot_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApeSummary {
    pub trans: f64,
    pub rot_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub n: usize,
    pub mode: RpeMode,
    pub scale_corrected: bool,
    pub scale_ratio: f64,
    pub rpe_rot_deg: f64,
    pub rpe_trans: f64,
    pub per_pair: Vec<PairError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ape: Option<ApeSummary>,
}

/// Scale correction (optional) followed by RPE, plus APE on request.
pub fn align_and_evaluate<T: Real>(
    est: &PoseTrajectory<T>,
    reference: &PoseTrajectory<T>,
    opts: &EvalOptions,
) -> Result<TrajectoryReport> {
    check_matched(est, reference)?;
    let (aligned, ratio) = if opts.scale_correct {
        let ratio = scale_ratio(est, reference)?;
        (est.scaled(ratio), ratio)
    } else {
        (est.clone(), T::one())
    };
    let r = rpe(&aligned, reference, opts.mode)?;
    let ape = if opts.include_ape {
        let a = ape(&aligned, reference)?;
        Some(ApeSummary {
            trans: a.trans.to_f64_lossy(),
            rot_deg: a.rot_deg.to_f64_lossy(),
        })
    } else {
        None
    };
    Ok(TrajectoryReport {
        n: est.len(),
        mode: opts.mode,
        scale_corrected: opts.scale_correct,
        scale_ratio: ratio.to_f64_lossy(),
        rpe_rot_deg: r.rot_deg.to_f64_lossy(),
        rpe_trans: r.trans.to_f64_lossy(),
        per_pair: r
            .trans_terms
            .iter()
            .zip(&r.rot_terms)
            .enumerate()
            .map(|(index, (t, a))| PairError {
                index,
                trans: t.to_f64_lossy(),
                rot_deg: a.to_f64_lossy(),
            })
            .collect(),
        ape,
    })
}
