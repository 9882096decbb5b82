//! Clip-level augmentation: bokeh, then distortion, then zoom, all resampled
//! once through the composed warp.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bokeh::{bokeh_render, BokehSettings};
use super::dropout::{sample_dropout, EffectFlags};
use super::spline::sample_spline_with_rng;
use super::warp::{distortion_crop_factor, optical_source, optical_warp_field, WarpField};
use crate::camera::{ApertureSpec, CameraIntrinsics, CameraParams, CameraPose, Distortion};
use crate::error::{Error, Result};
use crate::image::{Frame, Image};

const STREAM_DROPOUT: u64 = 0;
const STREAM_APERTURE: u64 = 1;
const STREAM_FOCUS_U: u64 = 2;
const STREAM_FOCUS_V: u64 = 3;
const STREAM_DISTORTION: u64 = 4;
const STREAM_ZOOM: u64 = 5;

/// Redraws allowed when a sampled distortion path leaves the invertible regime.
pub const MAX_DISTORTION_DRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub seed: u64,
    /// Dropout probability used by both the outer and the per-effect gates.
    pub p: f64,
    pub zoom_range: (f64, f64),
    pub distortion_range: (f64, f64),
    pub aperture_range: (f64, f64),
    /// Fraction of the frame, centered, that focus points are drawn from.
    pub focus_region: f64,
    pub spline_knots: usize,
    pub bokeh_gain: f64,
    pub bokeh_cap: f64,
    pub sigmoid_scale: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            p: 0.2,
            zoom_range: (1.0, 3.0),
            distortion_range: (-0.1, 0.1),
            aperture_range: (0.0, 100.0),
            focus_region: 0.8,
            spline_knots: 4,
            bokeh_gain: 0.25,
            bokeh_cap: 25.0,
            sigmoid_scale: 1.0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must be in [0, 1], got {}", self.p));
        }
        if !ordered(self.zoom_range) || self.zoom_range.0 < 1.0 {
            return bad(format!("zoom range must satisfy 1 <= lo < hi, got {:?}", self.zoom_range));
        }
        if !ordered(self.distortion_range) {
            return bad(format!("bad distortion range {:?}", self.distortion_range));
        }
        if !ordered(self.aperture_range) || self.aperture_range.0 < 0.0 {
            return bad(format!("aperture range must satisfy 0 <= lo < hi, got {:?}", self.aperture_range));
        }
        if !(self.focus_region > 0.0 && self.focus_region <= 1.0) {
            return bad(format!("focus region must be in (0, 1], got {}", self.focus_region));
        }
        if self.spline_knots < 2 {
            return bad(format!("need at least 2 spline knots, got {}", self.spline_knots));
        }
        if !(self.sigmoid_scale.is_finite() && self.sigmoid_scale > 0.0) {
            return bad(format!("sigmoid scale must be > 0, got {}", self.sigmoid_scale));
        }
        self.bokeh().validate()
    }

    pub fn bokeh(&self) -> BokehSettings {
        BokehSettings {
            gain: self.bokeh_gain,
            cap: self.bokeh_cap,
        }
    }
}

/// Sampled optics for one frame. Disabled effects hold neutral values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalFrameParams {
    pub zoom: f64,
    /// Center zoom that hides the borders the distortion would expose.
    pub crop: f64,
    /// `zoom · crop`, the focal-length multiplier of the emitted camera.
    pub effective_zoom: f64,
    pub distortion: [f64; 3],
    pub alpha: f64,
    /// Focus point in output pixel coordinates.
    pub focus_u: f64,
    pub focus_v: f64,
    pub enabled: EffectFlags,
}

impl OpticalFrameParams {
    pub fn neutral(intr: &CameraIntrinsics<f64>) -> Self {
        Self {
            zoom: 1.0,
            crop: 1.0,
            effective_zoom: 1.0,
            distortion: [0.0; 3],
            alpha: 0.0,
            focus_u: intr.cx,
            focus_v: intr.cy,
            enabled: EffectFlags::NONE,
        }
    }

    pub fn distortion(&self) -> Distortion<f64> {
        Distortion::from_array(self.distortion)
    }

    /// Source pixel in the input frame sampled by output pixel `(u, v)`.
    pub fn source(&self, u: f64, v: f64, intr: &CameraIntrinsics<f64>) -> [f64; 2] {
        optical_source(u, v, intr, &self.distortion(), self.crop, self.zoom)
    }

    pub fn warp_field(&self, intr: &CameraIntrinsics<f64>) -> WarpField {
        optical_warp_field(intr, &self.distortion(), self.crop, self.zoom)
    }

    /// Camera parameters describing the augmented frame: focal lengths scaled
    /// by the effective zoom and the distortion re-expressed for that zoom.
    pub fn camera_params(&self, intr: &CameraIntrinsics<f64>, pose: &CameraPose<f64>) -> CameraParams {
        let eff = intr.with_zoom(self.effective_zoom);
        let dist = self.distortion().zoomed(self.zoom);
        let aperture = ApertureSpec::new(self.alpha, self.focus_u, self.focus_v);
        CameraParams::from_parts(&eff, &dist, &aperture, pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalTrajectory {
    pub flags: EffectFlags,
    pub frames: Vec<OpticalFrameParams>,
}

impl OpticalTrajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedClip {
    pub frames: Vec<Frame>,
    pub params: Vec<CameraParams>,
    pub trajectory: OpticalTrajectory,
    /// Blur radius per output pixel, present when bokeh fired.
    pub blur_maps: Option<Vec<Image>>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples the optical trajectory for a clip without touching any pixels.
pub fn sample_optical_trajectory(
    n: usize,
    intr: &CameraIntrinsics<f64>,
    cfg: &AugmentConfig,
) -> Result<OpticalTrajectory> {
    cfg.validate()?;
    intr.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("empty clip".into()));
    }
    let flags = sample_dropout(&mut rng_for(cfg.seed, STREAM_DROPOUT), cfg.p)?;
    let mut frames = vec![OpticalFrameParams::neutral(intr); n];
    if !flags.any() {
        return Ok(OpticalTrajectory { flags, frames });
    }
    // Splines need two samples; a single frame takes the first of a pair.
    let m = n.max(2);
    let knots = cfg.spline_knots;
    let spline = |stream: u64, (lo, hi): (f64, f64)| {
        sample_spline_with_rng(&mut rng_for(cfg.seed, stream), m, lo, hi, knots)
    };

    if flags.bokeh {
        let alpha = spline(STREAM_APERTURE, cfg.aperture_range)?;
        let margin = (1.0 - cfg.focus_region) / 2.0;
        let (w, h) = ((intr.width - 1) as f64, (intr.height - 1) as f64);
        let fu = spline(STREAM_FOCUS_U, (margin * w, (1.0 - margin) * w))?;
        let fv = spline(STREAM_FOCUS_V, (margin * h, (1.0 - margin) * h))?;
        for (i, f) in frames.iter_mut().enumerate() {
            f.alpha = alpha[i];
            f.focus_u = fu[i];
            f.focus_v = fv[i];
        }
    }
    if flags.distortion {
        let (lo, hi) = cfg.distortion_range;
        let mut rng = rng_for(cfg.seed, STREAM_DISTORTION);
        let mut accepted = None;
        for _ in 0..MAX_DISTORTION_DRAWS {
            let k: Vec<Vec<f64>> = (0..3)
                .map(|_| sample_spline_with_rng(&mut rng, m, lo, hi, knots))
                .collect::<Result<_>>()?;
            let path: Vec<[f64; 3]> = (0..n).map(|i| [k[0][i], k[1][i], k[2][i]]).collect();
            if path.iter().all(|d| Distortion::from_array(*d).is_radius_monotone()) {
                accepted = Some(path);
                break;
            }
        }
        let path = accepted.ok_or_else(|| {
            Error::UnsupportedDistortion(format!(
                "no monotone distortion path in {MAX_DISTORTION_DRAWS} draws from [{lo}, {hi}]"
            ))
        })?;
        let crops = path
            .par_iter()
            .map(|d| distortion_crop_factor(&Distortion::from_array(*d), intr))
            .collect::<Result<Vec<f64>>>()?;
        for ((f, d), s) in frames.iter_mut().zip(path).zip(crops) {
            f.distortion = d;
            f.crop = s;
        }
    }
    if flags.zoom {
        let zoom = spline(STREAM_ZOOM, cfg.zoom_range)?;
        for (f, s) in frames.iter_mut().zip(zoom) {
            f.zoom = s;
        }
    }
    for f in &mut frames {
        f.effective_zoom = f.zoom * f.crop;
        f.enabled = flags;
    }
    Ok(OpticalTrajectory { flags, frames })
}

/// Renders one frame's optics: bokeh on the input (when `with_bokeh`), then
/// the composed distortion and zoom warp. Returns the frame and, with bokeh,
/// the blur radius per output pixel.
pub fn apply_optics(
    frame: &Frame,
    t: &OpticalFrameParams,
    intr: &CameraIntrinsics<f64>,
    bokeh: &BokehSettings,
    with_bokeh: bool,
) -> Result<(Frame, Option<Image>)> {
    let geometric = t.zoom != 1.0 || t.crop != 1.0 || t.distortion != [0.0; 3];
    let warp = geometric.then(|| t.warp_field(intr));
    let (blurred, radii) = if with_bokeh {
        let [su, sv] = t.source(t.focus_u, t.focus_v, intr);
        let spec = ApertureSpec::new(t.alpha, su, sv);
        let (f, r) = bokeh_render(frame, &spec, bokeh)?;
        (f, Some(r))
    } else {
        (frame.clone(), None)
    };
    Ok(match warp {
        Some(w) => (w.apply_frame(&blurred), radii.map(|r| w.apply(&r))),
        None => (blurred, radii),
    })
}

/// Augments a clip with identity camera poses.
pub fn augment_clip(
    frames: &[Frame],
    intr: &CameraIntrinsics<f64>,
    cfg: &AugmentConfig,
) -> Result<AugmentedClip> {
    let poses = vec![CameraPose::identity(); frames.len()];
    augment_clip_with_poses(frames, intr, &poses, cfg)
}

pub fn augment_clip_with_poses(
    frames: &[Frame],
    intr: &CameraIntrinsics<f64>,
    poses: &[CameraPose<f64>],
    cfg: &AugmentConfig,
) -> Result<AugmentedClip> {
    if poses.len() != frames.len() {
        return Err(Error::mismatch(
            format!("{} poses", frames.len()),
            format!("{} poses", poses.len()),
        ));
    }
    for f in frames {
        f.validate()?;
        if f.width() != intr.width || f.height() != intr.height {
            return Err(Error::mismatch(
                format!("{}x{}", intr.width, intr.height),
                format!("{}x{}", f.width(), f.height()),
            ));
        }
    }
    let trajectory = sample_optical_trajectory(frames.len(), intr, cfg)?;
    let flags = trajectory.flags;
    let params: Vec<CameraParams> = trajectory
        .frames
        .iter()
        .zip(poses)
        .map(|(f, pose)| f.camera_params(intr, pose))
        .collect();
    if !flags.any() {
        return Ok(AugmentedClip {
            frames: frames.to_vec(),
            params,
            trajectory,
            blur_maps: None,
        });
    }
    if flags.bokeh && frames.iter().any(|f| f.disparity.is_none()) {
        return Err(Error::Config("bokeh fired but a frame has no disparity".into()));
    }
    let bokeh = cfg.bokeh();
    let out: Vec<(Frame, Option<Image>)> = frames
        .par_iter()
        .zip(&trajectory.frames)
        .map(|(frame, t)| apply_optics(frame, t, intr, &bokeh, flags.bokeh))
        .collect::<Result<_>>()?;
    let (frames, radii): (Vec<Frame>, Vec<Option<Image>>) = out.into_iter().unzip();
    let blur_maps = flags.bokeh.then(|| radii.into_iter().flatten().collect());
    Ok(AugmentedClip {
        frames,
        params,
        trajectory,
        blur_maps,
    })
}
