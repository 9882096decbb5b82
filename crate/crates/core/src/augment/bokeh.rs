//! Depth-dependent disc blur driven by disparity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::ApertureSpec;
use crate::error::{Error, Result};
use crate::image::{Frame, Image};

/// Pixel radius per unit of `α·|d − d_in|`, and the radius cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BokehSettings {
    pub gain: f64,
    pub cap: f64,
}

impl Default for BokehSettings {
    fn default() -> Self {
        Self {
            gain: 0.25,
            cap: 25.0,
        }
    }
}

impl BokehSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain >= 0.0 && self.cap.is_finite() && self.cap >= 0.0) {
            return Err(Error::Config(format!(
                "bokeh gain and cap must be finite and >= 0, got {} and {}",
                self.gain, self.cap
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn radius(&self, alpha: f64, d: f64, d_in: f64) -> f64 {
        (self.gain * alpha * (d - d_in).abs()).min(self.cap)
    }
}

/// Edge weight of a sample at distance `dist` from a disc of radius `r`.
#[inline]
pub fn disc_coverage(r: f64, dist: f64) -> f64 {
    (r + 0.5 - dist).clamp(0.0, 1.0)
}

/// Blur-radius map for a disparity field.
pub fn blur_radius_map(disparity: &Image, spec: &ApertureSpec<f64>, settings: &BokehSettings) -> Image {
    let mut d_in = [0f32];
    disparity.sample_bilinear(spec.focus_u, spec.focus_v, &mut d_in);
    let d_in = d_in[0] as f64;
    let data = disparity
        .as_slice()
        .iter()
        .map(|&d| settings.radius(spec.alpha, d as f64, d_in) as f32)
        .collect();
    Image::from_raw(disparity.width(), disparity.height(), 1, data).expect("blur map size")
}

/// Gather blur: each output pixel is the coverage-weighted mean of the input
/// over a disc of its own blur radius, restricted to the frame.
pub fn disc_blur(img: &Image, radii: &Image) -> Image {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let data: Vec<f32> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let mut row = vec![0f32; w * c];
            let mut acc = vec![0f64; c];
            for x in 0..w {
                let out = &mut row[x * c..(x + 1) * c];
                let r = radii.get(x, y, 0) as f64;
                if r <= 0.0 {
                    out.copy_from_slice(img.pixel(x, y));
                    continue;
                }
                let reach = (r + 0.5).ceil() as isize;
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut total = 0.0;
                for dy in -reach..=reach {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for dx in -reach..=reach {
                        let sx = x as isize + dx;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let wgt = disc_coverage(r, ((dx * dx + dy * dy) as f64).sqrt());
                        if wgt == 0.0 {
                            continue;
                        }
                        total += wgt;
                        for (a, v) in acc.iter_mut().zip(img.pixel(sx as usize, sy as usize)) {
                            *a += wgt * *v as f64;
                        }
                    }
                }
                for (o, a) in out.iter_mut().zip(&acc) {
                    *o = (a / total) as f32;
                }
            }
            row
        })
        .collect();
    Image::from_raw(w, h, c, data).expect("blur output size")
}

/// Renders bokeh for `frame`. The disparity passes through unchanged.
pub fn bokeh_render(
    frame: &Frame,
    spec: &ApertureSpec<f64>,
    settings: &BokehSettings,
) -> Result<(Frame, Image)> {
    frame.validate()?;
    settings.validate()?;
    let disparity = frame
        .disparity
        .as_ref()
        .ok_or_else(|| Error::Config("bokeh needs a disparity map".into()))?;
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    if !(spec.alpha.is_finite() && spec.alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {}", spec.alpha)));
    }
    if !((0.0..w).contains(&spec.focus_u) && (0.0..h).contains(&spec.focus_v)) {
        return Err(Error::InvalidParameter(format!(
            "focus point ({}, {}) outside the frame",
            spec.focus_u, spec.focus_v
        )));
    }
    let radii = blur_radius_map(disparity, spec, settings);
    let pixels = disc_blur(&frame.pixels, &radii);
    Ok((
        Frame {
            pixels,
            disparity: Some(disparity.clone()),
        },
        radii,
    ))
}
