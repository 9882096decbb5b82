//! Optical augmentations: zoom, radial distortion and bokeh, driven by
//! spline-sampled parameters and dropout.

mod bokeh;
mod dropout;
mod pipeline;
mod spline;
mod warp;

pub use bokeh::{blur_radius_map, bokeh_render, disc_blur, disc_coverage, BokehSettings};
pub use dropout::{apply_dropout, sample_dropout, EffectFlags};
pub use pipeline::{
    apply_optics, augment_clip, augment_clip_with_poses, sample_optical_trajectory, AugmentConfig, AugmentedClip,
    OpticalFrameParams, OpticalTrajectory, MAX_DISTORTION_DRAWS,
};
pub use spline::{
    sample_spline_trajectory, sample_spline_with_rng, spline_through_controls, NaturalCubicSpline,
};
pub use warp::{
    crop_resize, distortion_crop_factor, distortion_warp, optical_source, optical_warp_field,
    zoom_by_crop_resize, zoom_warp, WarpField,
};
