//! Per-frame camera parameter records, one JSON object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{ApertureSpec, CameraIntrinsics, CameraPose, Distortion};
use crate::error::{Error, Result};

/// Full extended camera for one frame.
///
/// `R` is row-major; `R` and `t` are world-to-camera extrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub alpha: f64,
    pub focus_u: f64,
    pub focus_v: f64,
    #[serde(rename = "R")]
    pub rotation: [f64; 9],
    #[serde(rename = "t")]
    pub translation: [f64; 3],
}

impl CameraParams {
    pub fn from_parts(
        intr: &CameraIntrinsics<f64>,
        dist: &Distortion<f64>,
        aperture: &ApertureSpec<f64>,
        pose: &CameraPose<f64>,
    ) -> Self {
        let r = &pose.rotation;
        Self {
            fx: intr.fx,
            fy: intr.fy,
            cx: intr.cx,
            cy: intr.cy,
            width: intr.width,
            height: intr.height,
            k1: dist.k1,
            k2: dist.k2,
            k3: dist.k3,
            alpha: aperture.alpha,
            focus_u: aperture.focus_u,
            focus_v: aperture.focus_v,
            rotation: [
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
            ],
            translation: [pose.translation.x, pose.translation.y, pose.translation.z],
        }
    }

    /// Undistorted, zero-aperture camera at the identity pose.
    pub fn pinhole(intr: &CameraIntrinsics<f64>) -> Self {
        Self::from_parts(
            intr,
            &Distortion::zero(),
            &ApertureSpec::pinhole(intr),
            &CameraPose::identity(),
        )
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics<f64>> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
    }

    pub fn distortion(&self) -> Distortion<f64> {
        Distortion {
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
        }
    }

    pub fn aperture(&self) -> ApertureSpec<f64> {
        ApertureSpec::new(self.alpha, self.focus_u, self.focus_v)
    }

    pub fn pose(&self) -> Result<CameraPose<f64>> {
        CameraPose::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from_row_slice(&self.translation),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let intr = self.intrinsics()?;
        Distortion::new(self.k1, self.k2, self.k3)?;
        self.aperture().validate(&intr)?;
        self.pose()?;
        Ok(())
    }
}

pub fn read_params_jsonl(path: impl AsRef<Path>) -> Result<Vec<CameraParams>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let len = line.len() as u64 + 1;
        if !line.trim().is_empty() {
            let p: CameraParams = serde_json::from_str(&line)
                .map_err(|e| Error::format(path, offset, e.to_string()))?;
            p.validate().map_err(|e| Error::format(path, offset, e.to_string()))?;
            out.push(p);
        }
        offset += len;
    }
    Ok(out)
}

pub fn write_params_jsonl(path: impl AsRef<Path>, params: &[CameraParams]) -> Result<()> {
    write_jsonl(path, params)
}

pub(crate) fn write_jsonl<S: Serialize>(path: impl AsRef<Path>, records: &[S]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
