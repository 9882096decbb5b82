//! Nine-channel camera maps and their binary container.
//!
//! Container layout (`.akmp`): a 16-byte header with the ASCII magic `AKMP`
//! followed by little-endian `u32` height, width and frame count, then the
//! frames one after another. Each frame stores nine `H×W` planes of
//! little-endian `f32` in the order direction xyz, moment xyz, aperture xyz.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::ray::ray_through;
use super::distortion::distort_unchecked;
use super::{ApertureSpec, CameraIntrinsics, CameraPose, Distortion};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHANNELS: usize = 9;
pub const MAGIC: &[u8; 4] = b"AKMP";

/// Per-pixel direction, moment and aperture fields, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl CameraMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; CHANNELS * height * width],
        }
    }

    pub fn from_raw(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != CHANNELS * height * width {
            return Err(Error::mismatch(CHANNELS * height * width, data.len()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (CHANNELS, self.height, self.width)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    fn triple(&self, first: usize, x: usize, y: usize) -> [f32; 3] {
        let n = self.height * self.width;
        let i = y * self.width + x;
        [
            self.data[first * n + i],
            self.data[(first + 1) * n + i],
            self.data[(first + 2) * n + i],
        ]
    }

    pub fn direction(&self, x: usize, y: usize) -> [f32; 3] {
        self.triple(0, x, y)
    }

    pub fn moment(&self, x: usize, y: usize) -> [f32; 3] {
        self.triple(3, x, y)
    }

    pub fn aperture(&self, x: usize, y: usize) -> [f32; 3] {
        self.triple(6, x, y)
    }

    /// Sum of squared differences over channels `channels`.
    pub fn l2_distance(&self, other: &CameraMap, channels: std::ops::Range<usize>) -> f64 {
        channels
            .map(|c| {
                self.channel(c)
                    .iter()
                    .zip(other.channel(c))
                    .map(|(a, b)| {
                        let d = (*a as f64) - (*b as f64);
                        d * d
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Options for camera-map construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMapOptions {
    /// Multiplies α before the sigmoid in the aperture channels.
    pub sigmoid_scale: f64,
}

impl Default for CameraMapOptions {
    fn default() -> Self {
        Self { sigmoid_scale: 1.0 }
    }
}

pub fn build_camera_map<T: Real>(
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
    dist: &Distortion<T>,
    spec: &ApertureSpec<T>,
    height: usize,
    width: usize,
) -> Result<CameraMap> {
    build_camera_map_with(pose, intr, Some(dist), spec, height, width, CameraMapOptions::default())
}

/// Builds a camera map; `dist = None` skips the distortion step entirely.
pub fn build_camera_map_with<T: Real>(
    pose: &CameraPose<T>,
    intr: &CameraIntrinsics<T>,
    dist: Option<&Distortion<T>>,
    spec: &ApertureSpec<T>,
    height: usize,
    width: usize,
    opts: CameraMapOptions,
) -> Result<CameraMap> {
    if height != intr.height || width != intr.width {
        return Err(Error::mismatch(
            format!("{}x{}", intr.width, intr.height),
            format!("{width}x{height}"),
        ));
    }
    intr.validate()?;
    let n = height * width;
    let center = pose.center();
    let scale = T::lit(opts.sigmoid_scale);
    let rows: Vec<Vec<[f32; CHANNELS]>> = (0..height)
        .into_par_iter()
        .map(|y| {
            let v = T::lit(y as f64);
            (0..width)
                .map(|x| {
                    let u = T::lit(x as f64);
                    let (ud, vd) = match dist {
                        Some(d) => {
                            let p = distort_unchecked(u, v, intr, d);
                            (p.x, p.y)
                        }
                        None => (u, v),
                    };
                    let ray = ray_through(ud, vd, pose, intr, &center);
                    let a = spec.map_value_scaled(u, v, scale);
                    let f = |t: T| t.to_f32().unwrap_or(f32::NAN);
                    [
                        f(ray.direction.x),
                        f(ray.direction.y),
                        f(ray.direction.z),
                        f(ray.moment.x),
                        f(ray.moment.y),
                        f(ray.moment.z),
                        f(a.x),
                        f(a.y),
                        f(a.z),
                    ]
                })
                .collect()
        })
        .collect();
    let mut data = vec![0f32; CHANNELS * n];
    for (y, row) in rows.into_iter().enumerate() {
        for (x, px) in row.into_iter().enumerate() {
            let i = y * width + x;
            for (c, val) in px.into_iter().enumerate() {
                data[c * n + i] = val;
            }
        }
    }
    Ok(CameraMap {
        height,
        width,
        data,
    })
}

pub fn write_camera_maps(path: impl AsRef<Path>, maps: &[CameraMap]) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = maps.first().map(|m| (m.height, m.width)).unwrap_or((0, 0));
    if let Some(bad) = maps.iter().find(|m| m.height != h || m.width != w) {
        return Err(Error::mismatch(
            format!("{w}x{h}"),
            format!("{}x{}", bad.width, bad.height),
        ));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut header = Vec::with_capacity(16);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&(h as u32).to_le_bytes());
    header.extend_from_slice(&(w as u32).to_le_bytes());
    header.extend_from_slice(&(maps.len() as u32).to_le_bytes());
    out.write_all(&header).map_err(|e| Error::io(path, e))?;
    for m in maps {
        let bytes: Vec<u8> = m.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_camera_maps(path: impl AsRef<Path>) -> Result<Vec<CameraMap>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut header = [0u8; 16];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::format(path, 0, "truncated header"))?;
    if &header[0..4] != MAGIC {
        return Err(Error::format(path, 0, "bad magic, expected AKMP"));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (h, w, count) = (word(4), word(8), word(12));
    let per_frame = CHANNELS * h * w;
    let mut maps = Vec::with_capacity(count);
    let mut buf = vec![0u8; per_frame * 4];
    for k in 0..count {
        let offset = 16 + (k * per_frame * 4) as u64;
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::format(path, offset, "truncated frame data"))?;
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        maps.push(CameraMap {
            height: h,
            width: w,
            data,
        });
    }
    Ok(maps)
}
