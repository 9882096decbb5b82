use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use akira_kit::augment::{augment_clip_with_poses, sample_optical_trajectory, AugmentConfig};
use akira_kit::camera::{
    build_camera_map_with, read_params_jsonl, write_camera_maps, write_params_jsonl,
    CameraIntrinsics, CameraMap, CameraMapOptions, CameraParams, CameraPose,
};
use akira_kit::flow::{
    distortsim_clip, flowsim_clip, focus_area as area_of, read_flo, zoomsim_clip, FlowField,
    FlowSimConfig, MetricReport,
};
use akira_kit::image::{read_pfm, read_png, write_pfm, write_png, Frame, Image};
use akira_kit::synth::{dolly_zoom_bundle, render_scene, write_bundle, SceneSpec};
use akira_kit::traj::{align_and_evaluate, read_tum, EvalOptions, RpeMode, TrajectoryReport};
use akira_kit::{Error, Result};

use crate::files::{
    io_err, list_files, require_dir, require_file, to_json, write_atomically, write_json,
    OutputDir,
};
use crate::{
    AugmentArgs, CameramapArgs, FlowsimArgs, FocusAreaArgs, Global, OpticsSimArgs, RpeArgs,
    SynthArgs,
};

fn emit<T: Serialize>(global: &Global, report: &T, table: impl FnOnce() -> String) {
    if global.json {
        println!("{}", to_json(report));
    } else {
        print!("{}", table());
    }
}

fn save_report<T: Serialize>(path: Option<&PathBuf>, report: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, report),
        None => Ok(()),
    }
}

fn camera_maps(params: &[CameraParams], sigmoid_scale: f64) -> Result<Vec<CameraMap>> {
    let opts = CameraMapOptions { sigmoid_scale };
    params
        .iter()
        .map(|p| {
            p.validate()?;
            build_camera_map_with(
                &p.pose()?,
                &p.intrinsics()?,
                Some(&p.distortion()),
                &p.aperture(),
                p.height,
                p.width,
                opts,
            )
        })
        .collect()
}

// ---------------------------------------------------------------- augment

struct ClipInput {
    stems: Vec<String>,
    frames: Vec<Frame>,
    missing_disparity: Vec<PathBuf>,
    params: Option<Vec<CameraParams>>,
}

fn load_clip(dir: &Path) -> Result<ClipInput> {
    require_dir(dir)?;
    let pngs = list_files(&dir.join("frames"), "png")?;
    let stems: Vec<String> = pngs
        .iter()
        .map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let disp_dir = dir.join("disparity");
    let loaded: Vec<(Frame, Option<PathBuf>)> = pngs
        .par_iter()
        .zip(&stems)
        .map(|(png, stem)| {
            let pixels = read_png(png)?;
            let dpath = disp_dir.join(format!("{stem}.pfm"));
            if dpath.is_file() {
                let d = read_pfm(&dpath)?;
                Ok((Frame::with_disparity(pixels, d)?, None))
            } else {
                Ok((Frame::new(pixels), Some(dpath)))
            }
        })
        .collect::<Result<_>>()?;
    let (frames, missing): (Vec<Frame>, Vec<Option<PathBuf>>) = loaded.into_iter().unzip();
    let params_path = dir.join("params.jsonl");
    let params = if params_path.is_file() {
        let p = read_params_jsonl(&params_path)?;
        if p.len() != frames.len() {
            return Err(Error::Config(format!(
                "{} lists {} cameras for {} frames",
                params_path.display(),
                p.len(),
                frames.len()
            )));
        }
        Some(p)
    } else {
        None
    };
    Ok(ClipInput {
        stems,
        frames,
        missing_disparity: missing.into_iter().flatten().collect(),
        params,
    })
}

fn load_augment_config(args: &AugmentArgs, global: &Global) -> Result<AugmentConfig> {
    let (mut cfg, file_seed) = match &args.config {
        Some(path) => {
            require_file(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let json_err = |source| Error::Json {
                path: path.clone(),
                source,
            };
            let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
            let has_seed = value.get("seed").is_some();
            let cfg: AugmentConfig = serde_json::from_value(value).map_err(json_err)?;
            let seed = has_seed.then_some(cfg.seed);
            (cfg, seed)
        }
        None => (AugmentConfig::default(), None),
    };
    cfg.seed = match global.seed.or(file_seed) {
        Some(s) => s,
        None => global.seed(),
    };
    if let Some(p) = args.p {
        cfg.p = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn shared_intrinsics(params: &[CameraParams]) -> Result<CameraIntrinsics<f64>> {
    let first = params[0].intrinsics()?;
    for (i, p) in params.iter().enumerate() {
        let k = p.intrinsics()?;
        if k != first {
            return Err(Error::Config(format!(
                "camera {i} has different intrinsics from camera 0; clips need one camera"
            )));
        }
    }
    Ok(first)
}

#[derive(Serialize)]
struct AugmentSummary {
    seed: u64,
    frames: usize,
    flags: akira_kit::augment::EffectFlags,
    output: PathBuf,
}

pub fn augment(args: &AugmentArgs, global: &Global) -> Result<()> {
    let cfg = load_augment_config(args, global)?;
    let clip = load_clip(&args.input)?;
    let out = OutputDir::prepare(&args.output)?;
    out.run(|dir| {
        let first = &clip.frames[0];
        let (intr, poses) = match &clip.params {
            Some(p) => {
                let poses = p.iter().map(|c| c.pose()).collect::<Result<Vec<CameraPose<f64>>>>()?;
                (shared_intrinsics(p)?, poses)
            }
            None => {
                let focal = args.focal.unwrap_or(first.width() as f64);
                (
                    CameraIntrinsics::centered(focal, first.width(), first.height())?,
                    vec![CameraPose::identity(); clip.frames.len()],
                )
            }
        };
        let traj = sample_optical_trajectory(clip.frames.len(), &intr, &cfg)?;
        if traj.flags.bokeh {
            if let Some(p) = clip.missing_disparity.first() {
                return Err(Error::Config(format!(
                    "bokeh is enabled but disparity {} is missing",
                    p.display()
                )));
            }
        }
        if traj.flags.distortion {
            if let Some(i) = clip
                .params
                .iter()
                .flatten()
                .position(|p| !p.distortion().is_zero())
            {
                return Err(Error::Config(format!(
                    "camera {i} already has lens distortion; distortion augmentation needs undistorted input"
                )));
            }
        }
        let result = augment_clip_with_poses(&clip.frames, &intr, &poses, &cfg)?;
        let params = match (&clip.params, traj.flags.any()) {
            (Some(input), false) => input.clone(),
            (Some(input), true) if !traj.flags.bokeh => result
                .params
                .iter()
                .zip(input)
                .map(|(p, q)| CameraParams {
                    alpha: q.alpha,
                    focus_u: q.focus_u,
                    focus_v: q.focus_v,
                    ..p.clone()
                })
                .collect(),
            _ => result.params.clone(),
        };

        for sub in ["frames", "disparity"] {
            let p = dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| io_err(&p, e))?;
        }
        result
            .frames
            .par_iter()
            .zip(&clip.stems)
            .try_for_each(|(f, stem)| -> Result<()> {
                write_png(dir.join(format!("frames/{stem}.png")), &f.pixels)?;
                if let Some(d) = &f.disparity {
                    write_pfm(dir.join(format!("disparity/{stem}.pfm")), d)?;
                }
                Ok(())
            })?;
        if let Some(blur) = &result.blur_maps {
            let p = dir.join("blur");
            std::fs::create_dir_all(&p).map_err(|e| io_err(&p, e))?;
            blur.par_iter()
                .zip(&clip.stems)
                .try_for_each(|(b, stem)| write_pfm(p.join(format!("{stem}.pfm")), b))?;
        }
        write_params_jsonl(dir.join("params.jsonl"), &params)?;
        write_camera_maps(dir.join("cameramap.akmp"), &camera_maps(&params, cfg.sigmoid_scale)?)?;
        write_json(&dir.join("optics.json"), &result.trajectory)?;
        write_json(&dir.join("config.json"), &cfg)?;

        let summary = AugmentSummary {
            seed: cfg.seed,
            frames: result.frames.len(),
            flags: traj.flags,
            output: dir.to_path_buf(),
        };
        emit(global, &summary, || {
            let f = traj.flags;
            format!(
                "augmented {} frames (seed {})\n  bokeh {}  distortion {}  zoom {}\n  written to {}\n",
                summary.frames,
                cfg.seed,
                f.bokeh,
                f.distortion,
                f.zoom,
                dir.display()
            )
        });
        Ok(())
    })
}

// -------------------------------------------------------------- cameramap

pub fn cameramap(args: &CameramapArgs, global: &Global) -> Result<()> {
    require_file(&args.params)?;
    let params = read_params_jsonl(&args.params)?;
    if params.is_empty() {
        return Err(Error::Config(format!("{} has no cameras", args.params.display())));
    }
    let maps = camera_maps(&params, args.sigmoid_scale)?;
    write_atomically(&args.output, |tmp| write_camera_maps(tmp, &maps))?;
    let (h, w) = (maps[0].height(), maps[0].width());
    #[derive(Serialize)]
    struct Summary<'a> {
        frames: usize,
        height: usize,
        width: usize,
        output: &'a Path,
    }
    let s = Summary {
        frames: maps.len(),
        height: h,
        width: w,
        output: &args.output,
    };
    emit(global, &s, || {
        format!("{} camera maps of 9x{h}x{w} written to {}\n", maps.len(), args.output.display())
    });
    Ok(())
}

// ---------------------------------------------------------------- metrics

fn read_flows(path: &Path) -> Result<Vec<FlowField>> {
    list_files(path, "flo")?.par_iter().map(read_flo).collect()
}

fn metric_table(r: &MetricReport) -> String {
    let mut s = format!("{:<8}{:>12}{:>10}\n", "pair", "score", "valid%");
    for f in &r.per_frame {
        let score = if f.empty_mask {
            "empty".to_string()
        } else {
            format!("{:.6}", f.score)
        };
        s += &format!("{:<8}{:>12}{:>10.1}\n", format!("{:05}", f.index), score, 100.0 * f.valid_fraction);
    }
    s += &format!(
        "{}: {:.2} (raw {:.6}) over {} pairs, {} empty, t = {}\n",
        r.metric,
        r.score_x100,
        r.score,
        r.per_frame.len(),
        r.empty_frames,
        r.threshold
    );
    if r.is_empty() {
        s += "warning: every pair had an empty mask; the score is not meaningful\n";
    }
    s
}

fn finish_metric(global: &Global, report: &MetricReport, path: Option<&PathBuf>) -> Result<()> {
    save_report(path, report)?;
    emit(global, report, || metric_table(report));
    if report.is_empty() {
        log::warn!("{}: every mask is empty", report.metric);
    }
    Ok(())
}

pub fn flowsim(args: &FlowsimArgs, global: &Global) -> Result<()> {
    let cfg = FlowSimConfig {
        threshold: args.threshold,
    };
    cfg.validate()?;
    let refs = read_flows(&args.reference)?;
    let gens = read_flows(&args.gen)?;
    let report = flowsim_clip(&refs, &gens, &cfg)?;
    finish_metric(global, &report, args.report.as_ref())
}

pub enum OpticsMetric {
    Zoom,
    Distortion,
}

pub fn optics_sim(args: &OpticsSimArgs, global: &Global, metric: OpticsMetric) -> Result<()> {
    let cfg = FlowSimConfig {
        threshold: args.threshold,
    };
    cfg.validate()?;
    require_file(&args.params)?;
    let params = read_params_jsonl(&args.params)?;
    let flows = read_flows(&args.gen)?;
    if params.is_empty() {
        return Err(Error::Config(format!("{} has no cameras", args.params.display())));
    }
    let intr = params[0].intrinsics()?;
    let report = match metric {
        OpticsMetric::Zoom => {
            let scales: Vec<f64> = params.iter().map(|p| p.fx / params[0].fx).collect();
            zoomsim_clip(&flows, &scales, &intr, &cfg)?
        }
        OpticsMetric::Distortion => {
            let d: Vec<_> = params.iter().map(|p| p.distortion()).collect();
            distortsim_clip(&flows, &d, &intr, &cfg)?
        }
    };
    finish_metric(global, &report, args.report.as_ref())
}

#[derive(Serialize)]
struct FocusFrame {
    index: usize,
    file: String,
    focus_area: f64,
}

#[derive(Serialize)]
struct FocusReport {
    metric: &'static str,
    score: f64,
    threshold: f64,
    per_frame: Vec<FocusFrame>,
}

pub fn focus_area(args: &FocusAreaArgs, global: &Global) -> Result<()> {
    if !(args.threshold.is_finite() && args.threshold >= 0.0) {
        return Err(Error::Config(format!("threshold must be >= 0, got {}", args.threshold)));
    }
    let files = list_files(&args.blur, "pfm")?;
    let maps: Vec<Image> = files.par_iter().map(read_pfm).collect::<Result<_>>()?;
    let per_frame: Vec<FocusFrame> = files
        .into_iter()
        .zip(&maps)
        .enumerate()
        .map(|(index, (file, m))| FocusFrame {
            index,
            file: file.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            focus_area: area_of(m.as_slice(), args.threshold),
        })
        .collect();
    let score = per_frame.iter().map(|f| f.focus_area).sum::<f64>() / per_frame.len() as f64;
    let report = FocusReport {
        metric: "focus_area",
        score,
        threshold: args.threshold,
        per_frame,
    };
    save_report(args.report.as_ref(), &report)?;
    emit(global, &report, || {
        let mut s = format!("{:<8}{:>12}\n", "frame", "in-focus");
        for f in &report.per_frame {
            s += &format!("{:<8}{:>12.4}\n", format!("{:05}", f.index), f.focus_area);
        }
        s + &format!("focus_area: {:.4} (b_r < {} px)\n", report.score, report.threshold)
    });
    Ok(())
}

pub fn rpe(args: &RpeArgs, global: &Global) -> Result<()> {
    require_file(&args.est)?;
    require_file(&args.reference)?;
    let est = read_tum(&args.est)?;
    let reference = read_tum(&args.reference)?;
    let opts = EvalOptions {
        scale_correct: args.scale_correct,
        mode: if args.se3 { RpeMode::Se3 } else { RpeMode::Delta },
        include_ape: args.ape,
    };
    let report: TrajectoryReport = align_and_evaluate(&est, &reference, &opts)?;
    save_report(args.report.as_ref(), &report)?;
    emit(global, &report, || {
        let mut s = format!("{:<8}{:>14}{:>14}\n", "pair", "trans", "rot_deg");
        for p in &report.per_pair {
            s += &format!("{:<8}{:>14.6}{:>14.6}\n", format!("{:05}", p.index), p.trans, p.rot_deg);
        }
        s += &format!(
            "RPE-t {:.6}  RPE-R {:.6} deg  (n = {}, scale ratio {:.6}{})\n",
            report.rpe_trans,
            report.rpe_rot_deg,
            report.n,
            report.scale_ratio,
            if report.scale_corrected { ", scale corrected" } else { "" }
        );
        if let Some(a) = &report.ape {
            s += &format!("APE-t {:.6}  APE-R {:.6} deg\n", a.trans, a.rot_deg);
        }
        s
    });
    Ok(())
}

// ------------------------------------------------------------------ synth

pub const BUILTIN_SPECS: [(&str, &str); 4] = [
    ("zoom_only", include_str!("../specs/zoom_only.json")),
    ("distortion_only", include_str!("../specs/distortion_only.json")),
    ("bokeh_two_plane", include_str!("../specs/bokeh_two_plane.json")),
    ("dolly_zoom", include_str!("../specs/dolly_zoom.json")),
];

fn load_spec(args: &SynthArgs) -> Result<SceneSpec> {
    match (&args.spec, &args.builtin) {
        (Some(path), _) => {
            require_file(path)?;
            SceneSpec::from_json_file(path)
        }
        (None, Some(name)) => {
            let text = BUILTIN_SPECS
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| {
                    let names: Vec<&str> = BUILTIN_SPECS.iter().map(|(n, _)| *n).collect();
                    Error::Config(format!("unknown builtin spec {name:?}; choose from {names:?}"))
                })?;
            let spec: SceneSpec = serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("builtin spec {name}: {e}")))?;
            spec.validate()?;
            Ok(spec)
        }
        (None, None) => Err(Error::Config("give --spec or --builtin".into())),
    }
}

#[derive(Serialize)]
struct SynthSummary {
    seed: u64,
    frames: usize,
    flows: usize,
    min_flow_coverage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dolly: Option<akira_kit::synth::DollyCheck>,
    output: PathBuf,
}

pub fn synth(args: &SynthArgs, global: &Global) -> Result<()> {
    let spec = load_spec(args)?;
    let seed = match global.seed.or(spec.seed) {
        Some(s) => s,
        None => global.seed(),
    };
    let out = OutputDir::prepare(&args.output)?;
    out.run(|dir| {
        let (bundle, dolly) = if spec.dolly.is_some() {
            let (b, c) = dolly_zoom_bundle(&spec, seed)?;
            (b, Some(c))
        } else {
            (render_scene(&spec, seed)?, None)
        };
        write_bundle(dir, &bundle)?;
        if let Some(c) = &dolly {
            write_json(&dir.join("dolly_check.json"), c)?;
        }
        let summary = SynthSummary {
            seed,
            frames: bundle.frames.len(),
            flows: bundle.flows.len(),
            min_flow_coverage: bundle.flow_coverage.iter().copied().fold(1.0, f64::min),
            dolly,
            output: dir.to_path_buf(),
        };
        emit(global, &summary, || {
            let mut s = format!(
                "synthesized {} frames and {} flows (seed {}) in {}\n",
                summary.frames,
                summary.flows,
                seed,
                dir.display()
            );
            if let Some(c) = &summary.dolly {
                s += &format!(
                    "dolly zoom: L2 vs pure zoom {:.3}, vs pure translation {:.3}\n",
                    c.l2_vs_pure_zoom, c.l2_vs_pure_translation
                );
            }
            s
        });
        Ok(())
    })
}
