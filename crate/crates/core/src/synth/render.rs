use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{CropMode, Motion, SceneSpec, Track};
use crate::augment::{apply_optics, distortion_crop_factor, EffectFlags, OpticalFrameParams};
use crate::camera::{
    build_camera_map_with, write_camera_maps, write_jsonl, CameraIntrinsics, CameraMap,
    CameraMapOptions, CameraParams, CameraPose, Distortion,
};
use crate::error::{Error, Result};
use crate::flow::{fill_holes, write_flo, FlowField};
use crate::image::{write_pfm, write_png, Frame, Image};
use crate::traj::{write_tum, PoseTrajectory};

const STREAM_ZOOM: u64 = 10;
const STREAM_K: [u64; 3] = [11, 12, 13];
const STREAM_ALPHA: u64 = 14;
const STREAM_FOCUS: [u64; 2] = [15, 16];

/// Everything a synthetic clip is made of. Flow `i` maps frame `i` to frame
/// `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub spec: SceneSpec,
    pub seed: u64,
    pub intrinsics: CameraIntrinsics<f64>,
    pub optics: Vec<OpticalFrameParams>,
    pub poses: Vec<CameraPose<f64>>,
    pub params: Vec<CameraParams>,
    pub frames: Vec<Frame>,
    pub flows: Vec<FlowField>,
    /// Fraction of each flow computed exactly rather than hole-filled.
    pub flow_coverage: Vec<f64>,
    pub camera_maps: Vec<CameraMap>,
    pub blur_maps: Option<Vec<Image>>,
}

impl SceneBundle {
    pub fn trajectory(&self) -> PoseTrajectory<f64> {
        PoseTrajectory::from_extrinsics(&self.poses)
    }

    /// Focal multiplier of each frame relative to the base camera.
    pub fn zoom_scales(&self) -> Vec<f64> {
        self.optics.iter().map(|o| o.effective_zoom).collect()
    }

    /// Emitted distortion coefficients of each frame.
    pub fn distortions(&self) -> Vec<Distortion<f64>> {
        self.params.iter().map(|p| p.distortion()).collect()
    }
}

/// Per-frame optics from the scene's tracks. The disabled-effect flags mirror
/// which tracks are non-trivial.
pub fn sample_scene_optics(spec: &SceneSpec, seed: u64) -> Result<Vec<OpticalFrameParams>> {
    spec.validate()?;
    let n = spec.frames;
    let intr = spec.intrinsics()?;
    let o = &spec.optics;
    let zoom = match &spec.dolly {
        Some(d) => Track::Linear([1.0, d.zoom_end]).evaluate(n, seed, STREAM_ZOOM)?,
        None => o.zoom.evaluate(n, seed, STREAM_ZOOM)?,
    };
    let k: Vec<Vec<f64>> = [&o.k1, &o.k2, &o.k3]
        .iter()
        .zip(STREAM_K)
        .map(|(t, s)| t.evaluate(n, seed, s))
        .collect::<Result<_>>()?;
    let alpha = o.alpha.evaluate(n, seed, STREAM_ALPHA)?;
    let focus = |t: &Option<Track>, stream, dflt| match t {
        Some(t) => t.evaluate(n, seed, stream),
        None => Ok(vec![dflt; n]),
    };
    let fu = focus(&o.focus_u, STREAM_FOCUS[0], intr.cx)?;
    let fv = focus(&o.focus_v, STREAM_FOCUS[1], intr.cy)?;

    if let Some(s) = zoom.iter().find(|s| **s < 1.0) {
        return Err(Error::InvalidParameter(format!("zoom {s} below 1 needs outpainting")));
    }
    if let Some(a) = alpha.iter().find(|a| **a < 0.0) {
        return Err(Error::InvalidParameter(format!("negative aperture {a}")));
    }
    let (w, h) = (intr.width as f64, intr.height as f64);
    for i in 0..n {
        if !((0.0..w).contains(&fu[i]) && (0.0..h).contains(&fv[i])) {
            return Err(Error::InvalidParameter(format!(
                "focus ({}, {}) of frame {i} outside the frame",
                fu[i], fv[i]
            )));
        }
    }
    let dists: Vec<Distortion<f64>> = (0..n)
        .map(|i| Distortion::new(k[0][i], k[1][i], k[2][i]))
        .collect::<Result<_>>()?;
    let mut crops = dists
        .par_iter()
        .map(|d| distortion_crop_factor(d, &intr))
        .collect::<Result<Vec<f64>>>()?;
    if spec.optics.crop == CropMode::Clip {
        let m = crops.iter().copied().fold(1.0, f64::max);
        crops.iter_mut().for_each(|c| *c = m);
    }
    let flags = EffectFlags {
        bokeh: alpha.iter().any(|a| *a > 0.0),
        distortion: dists.iter().any(|d| !d.is_zero()),
        zoom: zoom.iter().any(|s| *s != 1.0),
    };
    Ok((0..n)
        .map(|i| OpticalFrameParams {
            zoom: zoom[i],
            crop: crops[i],
            effective_zoom: zoom[i] * crops[i],
            distortion: dists[i].coefficients(),
            alpha: alpha[i],
            focus_u: fu[i],
            focus_v: fv[i],
            enabled: flags,
        })
        .collect())
}

/// Output pixel of a frame whose warp sends it to source point `x`, or
/// `None` when `x` has no preimage on the distortion's invertible branch.
fn warp_preimage(
    x: [f64; 2],
    t: &OpticalFrameParams,
    dist: &Distortion<f64>,
    branch: (f64, f64),
    intr: &CameraIntrinsics<f64>,
) -> Option<[f64; 2]> {
    let (cx, cy) = (intr.cx, intr.cy);
    let (mut vx, mut vy) = (x[0] - cx, x[1] - cy);
    if t.crop != 1.0 {
        vx *= t.crop;
        vy *= t.crop;
    }
    if !dist.is_zero() {
        let len = vx.hypot(vy);
        if len > 0.0 {
            let norm = intr.normalization_radius();
            let rho = len / norm;
            let r = dist
                .invert_radius_on_branch(rho, 1e-13 * rho.max(1.0), branch)
                .ok()?;
            let k = r * norm / len;
            vx *= k;
            vy *= k;
        }
    }
    if t.zoom != 1.0 {
        vx *= t.zoom;
        vy *= t.zoom;
    }
    Some([cx + vx, cy + vy])
}

/// Exact forward flow from frame `a` to frame `b` of a clip rendered from
/// one static source image: `W_b⁻¹(W_a(p)) − p`. Pixels without a preimage
/// are hole-filled; the covered fraction is returned alongside.
pub fn pair_flow(
    a: &OpticalFrameParams,
    b: &OpticalFrameParams,
    intr: &CameraIntrinsics<f64>,
) -> (FlowField, f64) {
    let (w, h) = (intr.width, intr.height);
    let db = b.distortion();
    let branch = if db.is_zero() { (0.0, 0.0) } else { db.monotone_branch() };
    let rows: Vec<Vec<Option<[f64; 2]>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let (u, v) = (x as f64, y as f64);
                    let src = a.source(u, v, intr);
                    warp_preimage(src, b, &db, branch, intr).map(|p| [p[0] - u, p[1] - v])
                })
                .collect()
        })
        .collect();
    let mut flow = FlowField::zeros(w, h);
    let mut valid = vec![false; w * h];
    for (y, row) in rows.iter().enumerate() {
        for (x, f) in row.iter().enumerate() {
            if let Some([du, dv]) = f {
                flow.set(x, y, [*du as f32, *dv as f32]);
                valid[y * w + x] = true;
            }
        }
    }
    let covered = valid.iter().filter(|v| **v).count();
    if covered > 0 && covered < w * h {
        fill_holes(&mut flow, &valid);
    }
    (flow, covered as f64 / (w * h) as f64)
}

fn scene_motion(spec: &SceneSpec) -> Motion {
    match &spec.dolly {
        Some(d) if spec.frames > 1 => Motion::Line {
            step: [0.0, 0.0, -d.retreat / (spec.frames - 1) as f64],
        },
        _ => spec.motion.clone(),
    }
}

/// Renders a synthetic clip. Camera motion enters the poses, parameters,
/// camera maps and trajectory; the frames and flows carry the optical
/// effects only.
pub fn render_scene(spec: &SceneSpec, seed: u64) -> Result<SceneBundle> {
    let optics = sample_scene_optics(spec, seed)?;
    let intr = spec.intrinsics()?;
    let poses = scene_motion(spec).extrinsics(spec.frames)?;
    let params: Vec<CameraParams> = optics
        .iter()
        .zip(&poses)
        .map(|(o, p)| o.camera_params(&intr, p))
        .collect();

    let base = spec.base_frame(seed);
    let bokeh = spec.bokeh();
    let with_bokeh = optics.iter().any(|o| o.alpha > 0.0);
    let rendered: Vec<(Frame, Option<Image>)> = optics
        .par_iter()
        .map(|o| apply_optics(&base, o, &intr, &bokeh, with_bokeh))
        .collect::<Result<_>>()?;
    let (frames, blurs): (Vec<Frame>, Vec<Option<Image>>) = rendered.into_iter().unzip();
    let blur_maps = with_bokeh.then(|| blurs.into_iter().flatten().collect());

    let (flows, flow_coverage) = optics.windows(2).map(|p| pair_flow(&p[0], &p[1], &intr)).unzip();

    let opts = CameraMapOptions {
        sigmoid_scale: spec.sigmoid_scale,
    };
    let camera_maps = params
        .iter()
        .map(|p| {
            build_camera_map_with(
                &p.pose()?,
                &p.intrinsics()?,
                Some(&p.distortion()),
                &p.aperture(),
                intr.height,
                intr.width,
                opts,
            )
        })
        .collect::<Result<_>>()?;

    let mut spec = spec.clone();
    spec.seed = Some(seed);
    Ok(SceneBundle {
        spec,
        seed,
        intrinsics: intr,
        optics,
        poses,
        params,
        frames,
        flows,
        flow_coverage,
        camera_maps,
        blur_maps,
    })
}

/// How a dolly-zoom clip's camera maps relate to its two ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DollyCheck {
    /// Summed map L2 distance to the same clip without camera travel.
    pub l2_vs_pure_zoom: f64,
    /// Summed map L2 distance to the same clip without the zoom.
    pub l2_vs_pure_translation: f64,
    /// Direction channels change between the first and last frame.
    pub direction_varies: bool,
    /// Moment channels change between the first and last frame.
    pub moment_varies: bool,
}

impl DollyCheck {
    /// Both ingredients are visible in the maps.
    pub fn is_coupled(&self) -> bool {
        self.l2_vs_pure_zoom > 0.0 && self.l2_vs_pure_translation > 0.0
    }
}

fn maps_l2(a: &[CameraMap], b: &[CameraMap]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.l2_distance(y, 0..9)).sum()
}

/// Renders a dolly-zoom clip along with its pure-zoom and pure-translation
/// counterparts and compares their camera maps.
pub fn dolly_zoom_bundle(spec: &SceneSpec, seed: u64) -> Result<(SceneBundle, DollyCheck)> {
    let dolly = spec
        .dolly
        .ok_or_else(|| Error::Config("dolly-zoom needs a `dolly` section".into()))?;
    let bundle = render_scene(spec, seed)?;

    let mut zoom_only = spec.clone();
    zoom_only.dolly = None;
    zoom_only.motion = Motion::Static;
    zoom_only.optics.zoom = Track::Linear([1.0, dolly.zoom_end]);
    let mut travel_only = spec.clone();
    travel_only.dolly = None;
    travel_only.motion = scene_motion(spec);
    travel_only.optics.zoom = Track::Constant(1.0);

    let maps = |s: &SceneSpec| -> Result<Vec<CameraMap>> { Ok(render_scene(s, seed)?.camera_maps) };
    let first = &bundle.camera_maps[0];
    let last = &bundle.camera_maps[bundle.camera_maps.len() - 1];
    let check = DollyCheck {
        l2_vs_pure_zoom: maps_l2(&bundle.camera_maps, &maps(&zoom_only)?),
        l2_vs_pure_translation: maps_l2(&bundle.camera_maps, &maps(&travel_only)?),
        direction_varies: first.l2_distance(last, 0..3) > 0.0,
        moment_varies: first.l2_distance(last, 3..6) > 0.0,
    };
    Ok((bundle, check))
}

fn make_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes the bundle layout: `frames/%05d.png`, `disparity/%05d.pfm`,
/// `flow/%05d.flo`, `blur/%05d.pfm` (with bokeh), `traj.tum`,
/// `cameramap.akmp`, `params.jsonl` and `spec.json`.
pub fn write_bundle(dir: impl AsRef<Path>, bundle: &SceneBundle) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["frames", "disparity", "flow"] {
        make_dir(&dir.join(sub))?;
    }
    bundle
        .frames
        .par_iter()
        .enumerate()
        .try_for_each(|(i, f)| -> Result<()> {
            write_png(dir.join(format!("frames/{i:05}.png")), &f.pixels)?;
            if let Some(d) = &f.disparity {
                write_pfm(dir.join(format!("disparity/{i:05}.pfm")), d)?;
            }
            Ok(())
        })?;
    bundle
        .flows
        .par_iter()
        .enumerate()
        .try_for_each(|(i, f)| write_flo(dir.join(format!("flow/{i:05}.flo")), f))?;
    if let Some(blur) = &bundle.blur_maps {
        make_dir(&dir.join("blur"))?;
        blur.par_iter()
            .enumerate()
            .try_for_each(|(i, b)| write_pfm(dir.join(format!("blur/{i:05}.pfm")), b))?;
    }
    write_tum(dir.join("traj.tum"), &bundle.trajectory())?;
    write_camera_maps(dir.join("cameramap.akmp"), &bundle.camera_maps)?;
    write_jsonl(dir.join("params.jsonl"), &bundle.params)?;
    let spec_path = dir.join("spec.json");
    let text = serde_json::to_string_pretty(&bundle.spec).map_err(|source| Error::Json {
        path: spec_path.clone(),
        source,
    })?;
    fs::write(&spec_path, text + "\n").map_err(|e| Error::io(&spec_path, e))
}
