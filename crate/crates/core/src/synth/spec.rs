use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{sample_spline_with_rng, BokehSettings};
use crate::camera::{yaw, CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::image::{Frame, Image};

/// A per-frame parameter path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Track {
    Constant(f64),
    /// Straight ramp from the first value at frame 0 to the second at the
    /// last frame.
    Linear([f64; 2]),
    /// Seeded natural cubic spline through `knots` uniform draws in `[lo, hi]`.
    Spline { lo: f64, hi: f64, knots: usize },
    Values(Vec<f64>),
}

impl Track {
    pub fn evaluate(&self, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
        let out = match self {
            Track::Constant(v) => vec![*v; n],
            Track::Linear([a, b]) => (0..n)
                .map(|i| {
                    if n == 1 {
                        *a
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
            Track::Spline { lo, hi, knots } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                sample_spline_with_rng(&mut rng, n, *lo, *hi, *knots)?
            }
            Track::Values(v) => {
                if v.len() != n {
                    return Err(Error::Config(format!(
                        "track has {} values for {n} frames",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("track produced a non-finite value".into()));
        }
        Ok(out)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Track::Constant(_) => true,
            Track::Linear([a, b]) => a == b,
            Track::Spline { .. } => false,
            Track::Values(v) => v.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureKind {
    #[default]
    Checker,
    Noise,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Texture {
    pub kind: TextureKind,
    /// Checker square size in pixels.
    pub period: usize,
    /// Peak-to-peak amplitude of the uniform noise added on top.
    pub noise: f64,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            kind: TextureKind::Checker,
            period: 8,
            noise: 0.1,
        }
    }
}

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)` of constant disparity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plane {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub disparity: f64,
}

/// Camera path. Cameras look down +z; `line` moves the center by `step` per
/// frame, `arc` yaws around the y axis on a circle through the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Motion {
    #[default]
    Static,
    Line { step: [f64; 3] },
    Arc { radius: f64, angle_step_deg: f64 },
}

impl Motion {
    /// World-to-camera extrinsics for `n` frames.
    pub fn extrinsics(&self, n: usize) -> Result<Vec<CameraPose<f64>>> {
        (0..n)
            .map(|i| {
                let i = i as f64;
                let (rot_c2w, center) = match self {
                    Motion::Static => return Ok(CameraPose::identity()),
                    Motion::Line { step } => (
                        nalgebra::Matrix3::identity(),
                        Vector3::new(step[0], step[1], step[2]) * i,
                    ),
                    Motion::Arc {
                        radius,
                        angle_step_deg,
                    } => {
                        let a = (angle_step_deg * i).to_radians();
                        (yaw(a), Vector3::new(radius * a.sin(), 0.0, radius * (1.0 - a.cos())))
                    }
                };
                let r = rot_c2w.transpose();
                CameraPose::new(r, -(r * center))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropMode {
    /// One crop for the whole clip, the largest any frame needs.
    #[default]
    Clip,
    PerFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsSpec {
    pub zoom: Track,
    pub k1: Track,
    pub k2: Track,
    pub k3: Track,
    pub alpha: Track,
    /// Focus point in output pixels; the principal point when absent.
    pub focus_u: Option<Track>,
    pub focus_v: Option<Track>,
    pub crop: CropMode,
}

impl Default for OpticsSpec {
    fn default() -> Self {
        Self {
            zoom: Track::Constant(1.0),
            k1: Track::Constant(0.0),
            k2: Track::Constant(0.0),
            k3: Track::Constant(0.0),
            alpha: Track::Constant(0.0),
            focus_u: None,
            focus_v: None,
            crop: CropMode::Clip,
        }
    }
}

/// Coupled zoom-in and backward travel: zoom ramps from 1 to `zoom_end`
/// while the camera retreats `retreat` units along −z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DollySpec {
    pub zoom_end: f64,
    pub retreat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: Option<u64>,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Focal length in pixels; the frame width when absent.
    pub focal: Option<f64>,
    pub texture: Texture,
    pub background_disparity: f64,
    pub planes: Vec<Plane>,
    pub motion: Motion,
    pub optics: OpticsSpec,
    pub dolly: Option<DollySpec>,
    pub bokeh_gain: f64,
    pub bokeh_cap: f64,
    pub sigmoid_scale: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        let b = BokehSettings::default();
        Self {
            seed: None,
            width: 256,
            height: 256,
            frames: 16,
            focal: None,
            texture: Texture::default(),
            background_disparity: 0.0,
            planes: Vec::new(),
            motion: Motion::Static,
            optics: OpticsSpec::default(),
            dolly: None,
            bokeh_gain: b.gain,
            bokeh_cap: b.cap,
            sigmoid_scale: 1.0,
        }
    }
}

impl SceneSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SceneSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics<f64>> {
        CameraIntrinsics::centered(self.focal.unwrap_or(self.width as f64), self.width, self.height)
    }

    pub fn bokeh(&self) -> BokehSettings {
        BokehSettings {
            gain: self.bokeh_gain,
            cap: self.bokeh_cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.width < 2 || self.height < 2 {
            return bad(format!("frame size {}x{} is too small", self.width, self.height));
        }
        if self.frames < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frames));
        }
        if self.texture.period == 0 || !(0.0..=1.0).contains(&self.texture.noise) {
            return bad("texture period must be > 0 and noise in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.background_disparity) {
            return bad(format!("background disparity {} outside [0, 1]", self.background_disparity));
        }
        for (i, p) in self.planes.iter().enumerate() {
            if p.x0 >= p.x1 || p.y0 >= p.y1 || p.x1 > self.width || p.y1 > self.height {
                return bad(format!("plane {i} is empty or outside the frame"));
            }
            if !(0.0..=1.0).contains(&p.disparity) {
                return bad(format!("plane {i} disparity {} outside [0, 1]", p.disparity));
            }
        }
        if let Some(d) = &self.dolly {
            if !(d.zoom_end.is_finite() && d.zoom_end >= 1.0 && d.retreat.is_finite()) {
                return bad(format!("dolly needs zoom_end >= 1 and a finite retreat, got {d:?}"));
            }
        }
        if !(self.sigmoid_scale.is_finite() && self.sigmoid_scale > 0.0) {
            return bad(format!("sigmoid scale must be > 0, got {}", self.sigmoid_scale));
        }
        self.bokeh().validate()?;
        self.intrinsics()?;
        Ok(())
    }

    /// Static scene: texture plus plane disparity.
    pub fn base_frame(&self, seed: u64) -> Frame {
        let (w, h) = (self.width, self.height);
        let t = &self.texture;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(super::STREAM_TEXTURE);
        let mut px = Image::new(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let base = match t.kind {
                        TextureKind::Checker => {
                            let on = (x / t.period + y / t.period).is_multiple_of(2);
                            let tint = [0.0, 0.05, 0.1][c];
                            if on {
                                0.75 + tint
                            } else {
                                0.2 - tint
                            }
                        }
                        TextureKind::Noise => rng.random::<f64>(),
                        TextureKind::Gradient => [
                            x as f64 / (w - 1) as f64,
                            y as f64 / (h - 1) as f64,
                            0.5,
                        ][c],
                    };
                    let n = if t.noise > 0.0 {
                        (rng.random::<f64>() - 0.5) * t.noise
                    } else {
                        0.0
                    };
                    px.set(x, y, c, (base + n).clamp(0.0, 1.0) as f32);
                }
            }
        }
        let mut disp = Image::filled(w, h, 1, self.background_disparity as f32);
        for p in &self.planes {
            for y in p.y0..p.y1 {
                for x in p.x0..p.x1 {
                    disp.set(x, y, 0, p.disparity as f32);
                }
            }
        }
        Frame::with_disparity(px, disp).expect("same size")
    }
}
