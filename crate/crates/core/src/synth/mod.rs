//! Synthetic scenes with exactly known optics, poses and flows.

mod render;
mod spec;

pub use render::{
    dolly_zoom_bundle, pair_flow, render_scene, sample_scene_optics, write_bundle, DollyCheck,
    SceneBundle,
};
pub use spec::{
    CropMode, DollySpec, Motion, OpticsSpec, Plane, SceneSpec, Texture, TextureKind, Track,
};

const STREAM_TEXTURE: u64 = 20;
