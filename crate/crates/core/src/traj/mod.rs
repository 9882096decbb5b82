//! Trajectory errors (APE, RPE) and path-length scale correction.

mod metrics;
mod trajectory;

pub use metrics::{
    align_and_evaluate, ape, check_matched, rpe, scale_correct, scale_ratio, ApeSummary,
    EvalOptions, PairError, PoseErrors, RpeMode, TrajectoryReport, MIN_PATH_LENGTH,
};
pub use trajectory::{
    format_tum, parse_tum, read_tum, write_tum, PoseTrajectory, StampedPose,
    QUATERNION_NORM_TOLERANCE,
};

use nalgebra::Vector3;

use crate::scalar::Real;

#[inline]
pub(crate) fn norm3<T: Real>(v: &Vector3<T>) -> T {
    v.dot(v).sqrt()
}
