//! Extended pinhole camera: intrinsics, radial distortion, extrinsics and
//! aperture, plus the per-pixel camera maps built from them.

mod aperture;
mod distortion;
mod intrinsics;
mod map;
mod params;
mod pose;
mod ray;

pub use aperture::{aperture_map_value, sigmoid, ApertureSpec, MAX_APERTURE};
pub use distortion::{
    distort_pixel, undistort_pixel, Distortion, MAX_INVERSION_ITERATIONS, TRAINING_RANGE,
};
pub use intrinsics::CameraIntrinsics;
pub use map::{
    build_camera_map, build_camera_map_with, read_camera_maps, write_camera_maps, CameraMap,
    CameraMapOptions, CHANNELS,
};
pub use params::{read_params_jsonl, write_params_jsonl, CameraParams};
pub(crate) use params::write_jsonl;
pub use pose::{project, rotation_angle_deg, rotation_distance_deg, yaw, CameraPose, MIN_DEPTH};
pub use ray::{plucker_ray, plucker_ray_pinhole, PluckerRay};

pub(crate) use distortion::distort_unchecked;
