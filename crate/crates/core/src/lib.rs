//! Camera geometry and video augmentation toolkit.
//!
//! * [`camera`]: extended pinhole model (intrinsics, radial distortion,
//!   extrinsics, aperture) and nine-channel Plücker/aperture camera maps.
//! * [`augment`]: zoom, distortion and bokeh augmentations driven by
//!   spline-sampled parameter trajectories with augmentation dropout.
//! * [`flow`]: dense flow fields, `.flo` I/O, FlowSim and its zoom and
//!   distortion specializations against analytic flows.
//! * [`traj`]: APE/RPE trajectory errors with path-length scale correction.
//! * [`synth`]: synthetic scenes with exactly known ground truth.
//!
//! Geometry is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar for the common cases. Images and camera maps are stored as `f32`.

pub mod augment;
pub mod camera;
pub mod error;
pub mod flow;
pub mod image;
pub mod scalar;
pub mod synth;
pub mod traj;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

pub type Intrinsics = camera::CameraIntrinsics<f64>;
pub type Intrinsics32 = camera::CameraIntrinsics<f32>;
pub type Distortion = camera::Distortion<f64>;
pub type Distortion32 = camera::Distortion<f32>;
pub type Pose = camera::CameraPose<f64>;
pub type Pose32 = camera::CameraPose<f32>;
pub type Aperture = camera::ApertureSpec<f64>;
pub type Aperture32 = camera::ApertureSpec<f32>;
pub type Trajectory = traj::PoseTrajectory<f64>;
pub type Trajectory32 = traj::PoseTrajectory<f32>;
