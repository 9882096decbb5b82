use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::FlowField;
use crate::camera::{CameraIntrinsics, Distortion};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSimConfig {
    /// Minimum magnitude, in pixels, both flows need at a pixel.
    pub threshold: f64,
}

impl Default for FlowSimConfig {
    fn default() -> Self {
        Self { threshold: 0.5 }
    }
}

impl FlowSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::Config(format!(
                "flow threshold must be >= 0, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSimResult {
    /// Mean cosine over valid pixels; 0 when the mask is empty.
    pub score: f64,
    pub valid_pixels: usize,
    pub total_pixels: usize,
    pub empty_mask: bool,
}

impl FlowSimResult {
    pub fn valid_fraction(&self) -> f64 {
        self.valid_pixels as f64 / self.total_pixels.max(1) as f64
    }
}

fn check_same(a: &FlowField, b: &FlowField) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::mismatch(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    Ok(())
}

/// Mean cosine between flow directions over pixels where both magnitudes
/// exceed the threshold (and are nonzero).
pub fn flowsim(reference: &FlowField, generated: &FlowField, cfg: &FlowSimConfig) -> Result<FlowSimResult> {
    check_same(reference, generated)?;
    cfg.validate()?;
    let t = cfg.threshold;
    let (w, h) = (reference.width(), reference.height());
    let rows: Vec<(f64, usize)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut sum = 0.0;
            let mut n = 0;
            for x in 0..w {
                let [a0, a1] = reference.get(x, y);
                let [b0, b1] = generated.get(x, y);
                let (a0, a1, b0, b1) = (a0 as f64, a1 as f64, b0 as f64, b1 as f64);
                let (ma, mb) = (a0.hypot(a1), b0.hypot(b1));
                if ma > t && mb > t && ma > 0.0 && mb > 0.0 {
                    sum += ((a0 * b0 + a1 * b1) / (ma * mb)).clamp(-1.0, 1.0);
                    n += 1;
                }
            }
            (sum, n)
        })
        .collect();
    let (sum, n) = rows
        .into_iter()
        .fold((0.0, 0), |(s, c), (rs, rc)| (s + rs, c + rc));
    Ok(FlowSimResult {
        score: if n == 0 { 0.0 } else { sum / n as f64 },
        valid_pixels: n,
        total_pixels: w * h,
        empty_mask: n == 0,
    })
}

/// Zoom flow `(s − s′)(p − c)` at one point.
#[inline]
pub fn zoom_flow_at(u: f64, v: f64, s: f64, s_prime: f64, intr: &CameraIntrinsics<f64>) -> [f64; 2] {
    let k = s - s_prime;
    [k * (u - intr.cx), k * (v - intr.cy)]
}

/// First-order distortion flow `(p − c)·(D − D′)·[r², r⁴, r⁶]` at one point,
/// with `r` normalized as in the distortion model.
#[inline]
pub fn distortion_flow_at(
    u: f64,
    v: f64,
    d: &Distortion<f64>,
    d_prime: &Distortion<f64>,
    intr: &CameraIntrinsics<f64>,
) -> [f64; 2] {
    let dk = [d.k1 - d_prime.k1, d.k2 - d_prime.k2, d.k3 - d_prime.k3];
    let norm = intr.normalization_radius();
    let (dx, dy) = (u - intr.cx, v - intr.cy);
    let r2 = (dx * dx + dy * dy) / (norm * norm);
    let k = r2 * (dk[0] + r2 * (dk[1] + r2 * dk[2]));
    [dx * k, dy * k]
}

pub fn theoretical_zoom_flow(s: f64, s_prime: f64, intr: &CameraIntrinsics<f64>) -> FlowField {
    FlowField::from_fn(intr.width, intr.height, |x, y| {
        zoom_flow_at(x as f64, y as f64, s, s_prime, intr)
    })
}

pub fn theoretical_distortion_flow(
    d: &Distortion<f64>,
    d_prime: &Distortion<f64>,
    intr: &CameraIntrinsics<f64>,
) -> FlowField {
    FlowField::from_fn(intr.width, intr.height, |x, y| {
        distortion_flow_at(x as f64, y as f64, d, d_prime, intr)
    })
}

fn check_flow_size(gen: &FlowField, intr: &CameraIntrinsics<f64>) -> Result<()> {
    if gen.width() != intr.width || gen.height() != intr.height {
        return Err(Error::mismatch(
            format!("{}x{}", intr.width, intr.height),
            format!("{}x{}", gen.width(), gen.height()),
        ));
    }
    Ok(())
}

pub fn zoomsim(
    gen: &FlowField,
    s: f64,
    s_prime: f64,
    intr: &CameraIntrinsics<f64>,
    cfg: &FlowSimConfig,
) -> Result<FlowSimResult> {
    check_flow_size(gen, intr)?;
    flowsim(&theoretical_zoom_flow(s, s_prime, intr), gen, cfg)
}

pub fn distortsim(
    gen: &FlowField,
    d: &Distortion<f64>,
    d_prime: &Distortion<f64>,
    intr: &CameraIntrinsics<f64>,
    cfg: &FlowSimConfig,
) -> Result<FlowSimResult> {
    check_flow_size(gen, intr)?;
    flowsim(&theoretical_distortion_flow(d, d_prime, intr), gen, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub index: usize,
    pub score: f64,
    pub valid_fraction: f64,
    pub empty_mask: bool,
}

/// Clip-level metric report. The aggregate is the mean over frame pairs
/// whose mask is not empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub score: f64,
    pub score_x100: f64,
    pub valid_fraction: f64,
    pub threshold: f64,
    pub empty_frames: usize,
    pub per_frame: Vec<FrameScore>,
}

impl MetricReport {
    pub fn from_results(metric: &str, threshold: f64, results: &[FlowSimResult]) -> Self {
        let per_frame: Vec<FrameScore> = results
            .iter()
            .enumerate()
            .map(|(index, r)| FrameScore {
                index,
                score: r.score,
                valid_fraction: r.valid_fraction(),
                empty_mask: r.empty_mask,
            })
            .collect();
        let scored: Vec<f64> = results.iter().filter(|r| !r.empty_mask).map(|r| r.score).collect();
        let score = if scored.is_empty() {
            0.0
        } else {
            scored.iter().sum::<f64>() / scored.len() as f64
        };
        let valid_fraction = if results.is_empty() {
            0.0
        } else {
            results.iter().map(|r| r.valid_fraction()).sum::<f64>() / results.len() as f64
        };
        Self {
            metric: metric.to_string(),
            score,
            score_x100: score * 100.0,
            valid_fraction,
            threshold,
            empty_frames: results.len() - scored.len(),
            per_frame,
        }
    }

    /// True when no frame pair had any valid pixel.
    pub fn is_empty(&self) -> bool {
        self.empty_frames == self.per_frame.len()
    }
}

/// FlowSim over matched flow sequences.
pub fn flowsim_clip(refs: &[FlowField], gens: &[FlowField], cfg: &FlowSimConfig) -> Result<MetricReport> {
    if refs.len() != gens.len() {
        return Err(Error::mismatch(
            format!("{} flows", refs.len()),
            format!("{} flows", gens.len()),
        ));
    }
    let results = refs
        .iter()
        .zip(gens)
        .map(|(r, g)| flowsim(r, g, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_results("flowsim", cfg.threshold, &results))
}

fn pair_count(flows: usize, frames: usize) -> Result<()> {
    if frames != flows + 1 {
        return Err(Error::mismatch(
            format!("{} frames for {} flows", flows + 1, flows),
            format!("{frames} frames"),
        ));
    }
    Ok(())
}

/// ZoomSim over a clip; flow `i` goes from frame `i` (scale `s_i`) to frame
/// `i + 1`.
pub fn zoomsim_clip(
    flows: &[FlowField],
    scales: &[f64],
    intr: &CameraIntrinsics<f64>,
    cfg: &FlowSimConfig,
) -> Result<MetricReport> {
    pair_count(flows.len(), scales.len())?;
    let results = flows
        .iter()
        .enumerate()
        .map(|(i, f)| zoomsim(f, scales[i + 1], scales[i], intr, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_results("zoomsim", cfg.threshold, &results))
}

/// DistortSim over a clip; flow `i` goes from frame `i` to frame `i + 1`,
/// whose theoretical flow is driven by `D_i − D_{i+1}`.
pub fn distortsim_clip(
    flows: &[FlowField],
    coefficients: &[Distortion<f64>],
    intr: &CameraIntrinsics<f64>,
    cfg: &FlowSimConfig,
) -> Result<MetricReport> {
    pair_count(flows.len(), coefficients.len())?;
    let results = flows
        .iter()
        .enumerate()
        .map(|(i, f)| distortsim(f, &coefficients[i], &coefficients[i + 1], intr, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_results("distortsim", cfg.threshold, &results))
}

/// Fraction of pixels whose blur radius is below `threshold` pixels.
pub fn focus_area(blur: &[f32], threshold: f64) -> f64 {
    if blur.is_empty() {
        return 0.0;
    }
    let sharp = blur.iter().filter(|&&b| (b as f64) < threshold).count();
    sharp as f64 / blur.len() as f64
}

/// Default radius below which a pixel counts as in focus.
pub const FOCUS_THRESHOLD: f64 = 1.0;
