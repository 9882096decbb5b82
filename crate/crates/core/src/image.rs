//! Float images, frames with optional disparity, and PNG/PFM I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major interleaved `f32` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::mismatch(width * height * channels, data.len()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Bilinear sample at `(x, y)`; coordinates are clamped to the frame.
    ///
    /// Uses `a + f (b − a)` so that equal neighbours reproduce exactly.
    pub fn sample_bilinear(&self, x: f64, y: f64, out: &mut [f32]) {
        let xmax = (self.width - 1) as f64;
        let ymax = (self.height - 1) as f64;
        let x = x.clamp(0.0, xmax);
        let y = y.clamp(0.0, ymax);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = (x - x0 as f64) as f32;
        let fy = (y - y0 as f64) as f32;
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            let a = self.get(x0, y0, c);
            let b = self.get(x1, y0, c);
            let cc = self.get(x0, y1, c);
            let d = self.get(x1, y1, c);
            let top = a + fx * (b - a);
            let bottom = cc + fx * (d - cc);
            *o = top + fy * (bottom - top);
        }
    }

    pub fn all_finite_in_unit_range(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }
}

/// RGB frame with values in `[0, 1]` and an optional disparity plane in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pixels: Image,
    pub disparity: Option<Image>,
}

impl Frame {
    pub fn new(pixels: Image) -> Self {
        Self {
            pixels,
            disparity: None,
        }
    }

    pub fn with_disparity(pixels: Image, disparity: Image) -> Result<Self> {
        let f = Self {
            pixels,
            disparity: Some(disparity),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixels.channels() != 3 {
            return Err(Error::mismatch("3 channels", self.pixels.channels()));
        }
        if let Some(d) = &self.disparity {
            if !d.same_size(&self.pixels) || d.channels() != 1 {
                return Err(Error::mismatch(
                    format!("{}x{}x1 disparity", self.width(), self.height()),
                    format!("{}x{}x{}", d.width(), d.height(), d.channels()),
                ));
            }
        }
        Ok(())
    }
}

pub fn read_png(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
    Image::from_raw(w as usize, h as usize, 3, data)
}

/// Writes an 8-bit PNG (RGB for three channels, grayscale for one).
pub fn write_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        n => return Err(Error::mismatch("1 or 3 channels", n)),
    };
    image::save_buffer(path, &bytes, img.width() as u32, img.height() as u32, color).map_err(
        |e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        },
    )
}

/// Writes a little-endian PFM (`Pf` for one channel, `PF` for three).
pub fn write_pfm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let tag = match img.channels() {
        1 => "Pf",
        3 => "PF",
        n => return Err(Error::mismatch("1 or 3 channels", n)),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let row_len = img.width() * img.channels();
    let mut body = Vec::with_capacity(img.as_slice().len() * 4);
    for y in (0..img.height()).rev() {
        for v in &img.as_slice()[y * row_len..(y + 1) * row_len] {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    write!(out, "{tag}\n{} {}\n-1.0\n", img.width(), img.height())
        .and_then(|_| out.write_all(&body))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;

    // three whitespace-terminated header tokens after the tag line
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::format(path, start as u64, "truncated PFM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let tag = token(&mut pos)?;
    let channels = match tag.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return Err(Error::format(path, 0, format!("bad PFM tag {tag:?}"))),
    };
    let w_tok = token(&mut pos)?;
    let h_tok = token(&mut pos)?;
    let s_tok = token(&mut pos)?;
    let parse_err = |what: &str| Error::format(path, pos as u64, format!("bad PFM {what}"));
    let width: usize = w_tok.parse().map_err(|_| parse_err("width"))?;
    let height: usize = h_tok.parse().map_err(|_| parse_err("height"))?;
    let scale: f32 = s_tok.parse().map_err(|_| parse_err("scale"))?;
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * channels * 4;
    if bytes.len() < pos + need {
        return Err(Error::format(path, bytes.len() as u64, "truncated PFM raster"));
    }
    let raster = &bytes[pos..pos + need];
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut data = vec![0f32; width * height * channels];
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let file_row = i / row_len;
        let y = height - 1 - file_row;
        data[y * row_len + i % row_len] = v;
    }
    Image::from_raw(width, height, channels, data)
}
