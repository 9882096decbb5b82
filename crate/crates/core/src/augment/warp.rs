//! Inverse-mapped warps: every output pixel stores the source position it
//! samples from.
//!
//! The optical warp chains, from output to source: the center zoom by the
//! zoom factor, the radial distortion applied directly as a coordinate map,
//! and the center zoom by the distortion crop factor.

use rayon::prelude::*;

use crate::camera::{distort_unchecked, CameraIntrinsics, Distortion};
use crate::error::{Error, Result};
use crate::image::{Frame, Image};

/// Per-output-pixel source coordinates in pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    width: usize,
    height: usize,
    sources: Vec<[f64; 2]>,
}

impl WarpField {
    pub fn from_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> [f64; 2] + Sync) -> Self {
        let sources = (0..height)
            .into_par_iter()
            .flat_map_iter(|y| {
                let f = &f;
                (0..width).map(move |x| f(x as f64, y as f64))
            })
            .collect();
        Self {
            width,
            height,
            sources,
        }
    }

    pub fn identity(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| [x, y])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn source(&self, x: usize, y: usize) -> [f64; 2] {
        self.sources[y * self.width + x]
    }

    pub fn sources(&self) -> &[[f64; 2]] {
        &self.sources
    }

    /// True when every source lies in `[0, W−1] × [0, H−1]`.
    pub fn all_in_bounds(&self) -> bool {
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        self.sources
            .iter()
            .all(|&[x, y]| (0.0..=xmax).contains(&x) && (0.0..=ymax).contains(&y))
    }

    pub fn apply(&self, img: &Image) -> Image {
        let c = img.channels();
        let data: Vec<f32> = (0..self.height)
            .into_par_iter()
            .flat_map_iter(|y| {
                let mut row = vec![0f32; self.width * c];
                for x in 0..self.width {
                    let [sx, sy] = self.source(x, y);
                    img.sample_bilinear(sx, sy, &mut row[x * c..(x + 1) * c]);
                }
                row
            })
            .collect();
        Image::from_raw(self.width, self.height, c, data).expect("warp output size")
    }

    /// Warps the pixels and, when present, the disparity.
    pub fn apply_frame(&self, frame: &Frame) -> Frame {
        Frame {
            pixels: self.apply(&frame.pixels),
            disparity: frame.disparity.as_ref().map(|d| self.apply(d)),
        }
    }
}

/// Source position of output pixel `(u, v)` under the chained optical warp.
pub fn optical_source(
    u: f64,
    v: f64,
    intr: &CameraIntrinsics<f64>,
    dist: &Distortion<f64>,
    crop: f64,
    zoom: f64,
) -> [f64; 2] {
    let (cx, cy) = (intr.cx, intr.cy);
    let (u1, v1) = if zoom == 1.0 {
        (u, v)
    } else {
        (cx + (u - cx) / zoom, cy + (v - cy) / zoom)
    };
    let p = distort_unchecked(u1, v1, intr, dist);
    if crop == 1.0 {
        [p.x, p.y]
    } else {
        [cx + (p.x - cx) / crop, cy + (p.y - cy) / crop]
    }
}

pub fn optical_warp_field(
    intr: &CameraIntrinsics<f64>,
    dist: &Distortion<f64>,
    crop: f64,
    zoom: f64,
) -> WarpField {
    WarpField::from_fn(intr.width, intr.height, |u, v| {
        optical_source(u, v, intr, dist, crop, zoom)
    })
}

fn check_frame(frame: &Frame, intr: &CameraIntrinsics<f64>) -> Result<()> {
    frame.validate()?;
    if frame.width() != intr.width || frame.height() != intr.height {
        return Err(Error::mismatch(
            format!("{}x{}", intr.width, intr.height),
            format!("{}x{}", frame.width(), frame.height()),
        ));
    }
    Ok(())
}

/// Center zoom by `s ≥ 1`: output `(u, v)` samples the source at
/// `c + (u − c) / s`. Returns the frame and intrinsics with focal lengths
/// multiplied by `s`.
pub fn zoom_warp(
    frame: &Frame,
    s: f64,
    intr: &CameraIntrinsics<f64>,
) -> Result<(Frame, CameraIntrinsics<f64>)> {
    check_zoom(s)?;
    check_frame(frame, intr)?;
    if s == 1.0 {
        return Ok((frame.clone(), *intr));
    }
    let warp = optical_warp_field(intr, &Distortion::zero(), 1.0, s);
    Ok((warp.apply_frame(frame), intr.with_zoom(s)))
}

fn check_zoom(s: f64) -> Result<()> {
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "zoom factor must be finite and >= 1 (outpainting is not supported), got {s}"
        )));
    }
    Ok(())
}

/// Resizes the axis-aligned box `[x0, x1] × [y0, y1]` of `img` to the full
/// frame with bilinear sampling, box corners landing on the corner pixels.
pub fn crop_resize(img: &Image, x0: f64, y0: f64, x1: f64, y1: f64) -> Image {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let sx = (x1 - x0) / (w - 1) as f64;
    let sy = (y1 - y0) / (h - 1) as f64;
    let mut out = Image::new(w, h, c);
    let mut px = vec![0f32; c];
    for y in 0..h {
        let src_y = y0 + y as f64 * sy;
        for x in 0..w {
            img.sample_bilinear(x0 + x as f64 * sx, src_y, &mut px);
            for (k, v) in px.iter().enumerate() {
                out.set(x, y, k, *v);
            }
        }
    }
    out
}

/// Zoom implemented as a center crop of fraction `1/s` about the principal
/// point followed by a resize back to full resolution.
pub fn zoom_by_crop_resize(frame: &Frame, s: f64, intr: &CameraIntrinsics<f64>) -> Result<Frame> {
    check_zoom(s)?;
    check_frame(frame, intr)?;
    let (w, h) = ((intr.width - 1) as f64, (intr.height - 1) as f64);
    let x0 = intr.cx - intr.cx / s;
    let y0 = intr.cy - intr.cy / s;
    let x1 = intr.cx + (w - intr.cx) / s;
    let y1 = intr.cy + (h - intr.cy) / s;
    Ok(Frame {
        pixels: crop_resize(&frame.pixels, x0, y0, x1, y1),
        disparity: frame
            .disparity
            .as_ref()
            .map(|d| crop_resize(d, x0, y0, x1, y1)),
    })
}

/// Smallest center zoom `s ≥ 1` such that the distortion warp followed by the
/// zoom samples only inside the source frame.
///
/// The frame border is sampled at `8 (W + H)` sub-pixel positions plus the
/// four corners; every integer output pixel is checked as well, so the bound
/// is exact for the pixel grid.
pub fn distortion_crop_factor(dist: &Distortion<f64>, intr: &CameraIntrinsics<f64>) -> Result<f64> {
    intr.validate()?;
    if !dist.is_radius_monotone() {
        return Err(Error::UnsupportedDistortion(format!(
            "radius map of ({}, {}, {}) is not increasing on the frame",
            dist.k1, dist.k2, dist.k3
        )));
    }
    if dist.is_zero() {
        return Ok(1.0);
    }
    let (w, h) = ((intr.width - 1) as f64, (intr.height - 1) as f64);
    let (cx, cy) = (intr.cx, intr.cy);

    let required = |u: f64, v: f64| -> Result<f64> {
        let p = distort_unchecked(u, v, intr, dist);
        let axis = |val: f64, c: f64, max: f64| -> Result<f64> {
            let off = val - c;
            let room = if off > 0.0 { max - c } else { c };
            if off == 0.0 {
                return Ok(1.0);
            }
            if room <= 0.0 {
                return Err(Error::InvalidParameter(
                    "principal point on the frame border leaves no room to crop".into(),
                ));
            }
            Ok(off.abs() / room)
        };
        Ok(axis(p.x, cx, w)?.max(axis(p.y, cy, h)?))
    };

    let mut s = 1.0f64;
    let per_x = 4 * intr.width;
    let per_y = 4 * intr.height;
    for i in 0..=per_x {
        let u = w * i as f64 / per_x as f64;
        s = s.max(required(u, 0.0)?).max(required(u, h)?);
    }
    for j in 0..=per_y {
        let v = h * j as f64 / per_y as f64;
        s = s.max(required(0.0, v)?).max(required(w, v)?);
    }
    let grid_max = (0..intr.height)
        .into_par_iter()
        .map(|y| {
            (0..intr.width).try_fold(1.0f64, |acc, x| Ok(acc.max(required(x as f64, y as f64)?)))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(1.0, f64::max);
    let mut s = s.max(grid_max);
    // Rounding in the inverse map can land a corner a few ulps outside.
    for _ in 0..64 {
        if optical_warp_field(intr, dist, s, 1.0).all_in_bounds() {
            break;
        }
        s *= 1.0 + 4.0 * f64::EPSILON;
    }
    Ok(s)
}

/// Distortion augmentation with the crop zoom folded in. Returns the warped
/// frame, the warp field and the crop factor.
pub fn distortion_warp(
    frame: &Frame,
    dist: &Distortion<f64>,
    intr: &CameraIntrinsics<f64>,
) -> Result<(Frame, WarpField, f64)> {
    check_frame(frame, intr)?;
    let s = distortion_crop_factor(dist, intr)?;
    let warp = optical_warp_field(intr, dist, s, 1.0);
    if dist.is_zero() {
        return Ok((frame.clone(), warp, s));
    }
    Ok((warp.apply_frame(frame), warp, s))
}
