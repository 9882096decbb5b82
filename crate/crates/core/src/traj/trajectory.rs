use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest accepted deviation of a TUM quaternion norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// One timestamped camera-to-world pose (TUM convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose<T: Real> {
    pub timestamp: T,
    pub rotation: Matrix3<T>,
    pub position: Vector3<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseTrajectory<T: Real> {
    pub poses: Vec<StampedPose<T>>,
}

impl<T: Real> PoseTrajectory<T> {
    /// Builds a trajectory, requiring strictly increasing timestamps.
    pub fn new(poses: Vec<StampedPose<T>>) -> Result<Self> {
        let traj = Self { poses };
        traj.validate()?;
        Ok(traj)
    }

    /// Trajectory from world-to-camera extrinsics, stamped `0, 1, 2, …`.
    pub fn from_extrinsics(extrinsics: &[CameraPose<T>]) -> Self {
        let poses = extrinsics
            .iter()
            .enumerate()
            .map(|(i, p)| StampedPose {
                timestamp: T::lit(i as f64),
                rotation: p.rotation.transpose(),
                position: p.center(),
            })
            .collect();
        Self { poses }
    }

    /// Positions only, identity rotations, stamped `0, 1, 2, …`.
    pub fn from_positions(positions: &[Vector3<T>]) -> Self {
        let poses = positions
            .iter()
            .enumerate()
            .map(|(i, p)| StampedPose {
                timestamp: T::lit(i as f64),
                rotation: Matrix3::identity(),
                position: *p,
            })
            .collect();
        Self { poses }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.poses.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::TrajectoryMismatch(format!(
                    "timestamps not strictly increasing at poses {i} and {} ({} then {})",
                    i + 1,
                    w[0].timestamp,
                    w[1].timestamp
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Polyline arc length of the positions.
    pub fn path_length(&self) -> T {
        self.poses
            .windows(2)
            .fold(T::zero(), |acc, w| acc + super::norm3(&(w[1].position - w[0].position)))
    }

    /// Same trajectory with every position multiplied by `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        Self {
            poses: self
                .poses
                .iter()
                .map(|p| StampedPose {
                    position: p.position * lambda,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> PoseTrajectory<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        PoseTrajectory {
            poses: self
                .poses
                .iter()
                .map(|p| StampedPose {
                    timestamp: c(p.timestamp),
                    rotation: p.rotation.map(c),
                    position: p.position.map(c),
                })
                .collect(),
        }
    }
}

/// Reads a TUM trajectory: `timestamp tx ty tz qx qy qz qw` per line, `#`
/// comments and blank lines ignored. Quaternions are normalized; a norm more
/// than 1e-3 away from 1 is a format error.
pub fn read_tum(path: impl AsRef<Path>) -> Result<PoseTrajectory<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let traj = parse_tum(&text).map_err(|(offset, msg)| Error::format(path, offset, msg))?;
    traj.validate().map_err(|e| match e {
        Error::TrajectoryMismatch(m) => Error::format(path, 0, m),
        other => other,
    })?;
    Ok(traj)
}

/// Parses TUM text, reporting the byte offset of the first bad line.
pub fn parse_tum(text: &str) -> std::result::Result<PoseTrajectory<f64>, (u64, String)> {
    let mut poses = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let here = offset;
        offset += line.len() as u64;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fail = |msg: String| (here, format!("line {}: {msg}", lineno + 1));
        let vals = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| fail(format!("bad number {t:?}"))))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        if vals.len() != 8 {
            return Err(fail(format!("expected 8 fields, found {}", vals.len())));
        }
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(fail("non-finite value".into()));
        }
        let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(fail(format!("quaternion norm {norm} is not within 1e-3 of 1")));
        }
        let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        poses.push(StampedPose {
            timestamp: vals[0],
            rotation,
            position: Vector3::new(vals[1], vals[2], vals[3]),
        });
    }
    Ok(PoseTrajectory { poses })
}

pub fn format_tum(traj: &PoseTrajectory<f64>) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in &traj.poses {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(p.rotation));
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.timestamp, p.position.x, p.position.y, p.position.z, q.i, q.j, q.k, q.w
        );
    }
    out
}

pub fn write_tum(path: impl AsRef<Path>, traj: &PoseTrajectory<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_tum(traj)).map_err(|e| Error::io(path, e))
}
