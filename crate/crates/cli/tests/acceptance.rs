//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use akira_kit::augment::{bokeh_render, sample_dropout, zoom_warp, BokehSettings};
use akira_kit::camera::{
    distort_pixel, plucker_ray, undistort_pixel, yaw, CameraIntrinsics, CameraPose, Distortion,
};
use akira_kit::flow::{
    flowsim, focus_area, read_flo, write_flo, zoomsim_clip, distortsim_clip, FlowField,
    FlowSimConfig, FOCUS_THRESHOLD,
};
use akira_kit::image::{Frame, Image};
use akira_kit::synth::{pair_flow, render_scene, SceneSpec};
use akira_kit::traj::{ape, parse_tum, rpe, scale_correct, PoseTrajectory, RpeMode, StampedPose};
use akira_kit::Aperture;
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs())
}

fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    Rotation3::from_scaled_axis(axis * std::f64::consts::PI).into_inner()
}

fn random_distortion(rng: &mut impl Rng) -> Distortion<f64> {
    Distortion::from_array([
        rng.random_range(-0.1..=0.1),
        rng.random_range(-0.1..=0.1),
        rng.random_range(-0.1..=0.1),
    ])
}

fn plucker() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_md, mut worst_unit) = (0f64, 0f64);
    let mut nonzero_moment = 0usize;
    for i in 0..100_000 {
        let w = rng.random_range(16..2048usize);
        let h = rng.random_range(16..2048usize);
        let f = rng.random_range(50.0..3000.0);
        let intr = CameraIntrinsics::new(
            f,
            f * rng.random_range(0.8..1.25),
            rng.random_range(0.3..0.7) * w as f64,
            rng.random_range(0.3..0.7) * h as f64,
            w,
            h,
        )
        .map_err(|e| e.to_string())?;
        let t = if i % 10 == 0 {
            Vector3::zeros()
        } else {
            Vector3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
        };
        let pose = CameraPose::new(random_rotation(&mut rng), t).map_err(|e| e.to_string())?;
        let dist = random_distortion(&mut rng);
        let u = rng.random_range(0.0..w as f64);
        let v = rng.random_range(0.0..h as f64);
        let ray = plucker_ray(u, v, &pose, &intr, &dist);
        worst_md = worst_md.max(ray.moment.dot(&ray.direction).abs());
        worst_unit = worst_unit.max((ray.direction.norm() - 1.0).abs());
        if i % 10 == 0 && ray.moment.iter().any(|m| *m != 0.0) {
            nonzero_moment += 1;
        }
    }
    let el = start.elapsed();
    check(
        worst_md < 1e-9 && worst_unit < 1e-9 && nonzero_moment == 0 && el < Duration::from_secs(10),
        format!(
            "max |m.d| {worst_md:.2e}, max ||d|-1| {worst_unit:.2e}, t=0 with nonzero moment {nonzero_moment}, {}",
            within(el, Duration::from_secs(10))
        ),
    )
}

/// Preimage of `p` found by scanning the radius map densely along its ray,
/// then bisecting the first bracket.
fn scan_preimage(p: [f64; 2], intr: &CameraIntrinsics<f64>, d: &Distortion<f64>) -> Option<[f64; 2]> {
    let norm = ((intr.width as f64 / 2.0).powi(2) + (intr.height as f64 / 2.0).powi(2)).sqrt();
    let (dx, dy) = (p[0] - intr.cx, p[1] - intr.cy);
    let rho = dx.hypot(dy) / norm;
    if rho == 0.0 {
        return Some(p);
    }
    let [k1, k2, k3] = d.coefficients();
    let g = |r: f64| {
        let r2 = r * r;
        r * (1.0 + k1 * r2 + k2 * r2 * r2 + k3 * r2 * r2 * r2) - rho
    };
    let steps = 4000;
    let top = 1.5;
    let mut prev = 0.0;
    for i in 1..=steps {
        let r = top * i as f64 / steps as f64;
        if g(prev) <= 0.0 && g(r) >= 0.0 {
            let (mut lo, mut hi) = (prev, r);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let k = 0.5 * (lo + hi) / rho;
            return Some([intr.cx + dx * k, intr.cy + dy * k]);
        }
        prev = r;
    }
    None
}

fn distortion_round_trip() -> Outcome {
    let start = Instant::now();
    let intr = CameraIntrinsics::<f64>::centered(300.0, 640, 480).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut worst_oracle) = (0f64, 0f64);
    let (mut ok, mut no_preimage, mut disagree) = (0usize, 0usize, 0usize);
    for _ in 0..100 {
        let d = random_distortion(&mut rng);
        for _ in 0..1000 {
            let p = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
            let oracle = scan_preimage(p, &intr, &d);
            match (undistort_pixel(p[0], p[1], &intr, &d), oracle) {
                (Ok(q), Some(o)) => {
                    let back = distort_pixel(q.x, q.y, &intr, &d).map_err(|e| e.to_string())?;
                    worst = worst.max((back.x - p[0]).hypot(back.y - p[1]));
                    worst_oracle = worst_oracle.max((q.x - o[0]).hypot(q.y - o[1]));
                    ok += 1;
                }
                (Err(_), None) => no_preimage += 1,
                _ => disagree += 1,
            }
        }
    }
    let hand = CameraIntrinsics::<f64>::centered(100.0, 200, 200).map_err(|e| e.to_string())?;
    let k = Distortion::from_array([0.1, 0.0, 0.0]);
    let fwd = distort_pixel(200.0, 100.0, &hand, &k).map_err(|e| e.to_string())?;
    let inv = undistort_pixel(205.0, 100.0, &hand, &k).map_err(|e| e.to_string())?;
    let hand_err = (fwd.x - 205.0).abs().max((fwd.y - 100.0).abs());
    let inv_err = (inv.x - 200.0).hypot(inv.y - 100.0);
    let el = start.elapsed();
    check(
        worst < 1e-3
            && worst_oracle < 1e-3
            && disagree == 0
            && hand_err < 1e-12
            && inv_err < 1e-3
            && el < Duration::from_secs(5),
        format!(
            "{ok} round trips, max residual {worst:.2e} px, max gap to scan oracle {worst_oracle:.2e} px, \
             {no_preimage} without preimage (oracle agrees), {disagree} disagreements; \
             (200,100)->({:.12}, {:.12}), inverse gap {inv_err:.2e}; {}",
            fwd.x,
            fwd.y,
            within(el, Duration::from_secs(5))
        ),
    )
}

fn bilinear(img: &Image, x: f64, y: f64, c: usize) -> f64 {
    let x = x.clamp(0.0, (img.width() - 1) as f64);
    let y = y.clamp(0.0, (img.height() - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let g = |xx, yy| img.get(xx, yy, c) as f64;
    (1.0 - fy) * ((1.0 - fx) * g(x0, y0) + fx * g(x1, y0)) + fy * ((1.0 - fx) * g(x0, y1) + fx * g(x1, y1))
}

fn zoom_equivalence() -> Outcome {
    let spec = SceneSpec::default();
    let frame = spec.base_frame(5);
    let intr = spec.intrinsics().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut pass = true;
    for s in [1.0, 1.5, 2.0, 3.0] {
        let (out, zi) = zoom_warp(&frame, s, &intr).map_err(|e| e.to_string())?;
        // crop the centered box of size W/s x H/s and stretch it back
        let (w, h) = (intr.width as f64, intr.height as f64);
        let (x0, y0) = (intr.cx - intr.cx / s, intr.cy - intr.cy / s);
        let mut worst = 0f64;
        for y in 0..intr.height {
            for x in 0..intr.width {
                let sx = x0 + x as f64 * (w / s) / w;
                let sy = y0 + y as f64 * (h / s) / h;
                for c in 0..3 {
                    let want = bilinear(&frame.pixels, sx, sy, c);
                    worst = worst.max((out.pixels.get(x, y, c) as f64 - want).abs());
                }
            }
        }
        let fx_ok = (zi.fx - s * intr.fx).abs() < 1e-12;
        pass &= worst < 1e-5 && fx_ok;
        lines.push(format!("s={s}: {worst:.2e}"));
    }
    check(pass, format!("max channel error {}", lines.join(", ")))
}

fn zoom_spec() -> SceneSpec {
    serde_json::from_str(include_str!("../specs/zoom_only.json")).expect("zoom spec")
}

fn distortion_spec() -> SceneSpec {
    serde_json::from_str(include_str!("../specs/distortion_only.json")).expect("distortion spec")
}

fn closure() -> Outcome {
    let start = Instant::now();
    let cfg = FlowSimConfig::default();
    let (mut zoom_fwd, mut zoom_rev, mut dist_fwd, mut dist_rev) = (vec![], vec![], vec![], vec![]);
    for seed in 0..20u64 {
        for (spec, is_zoom) in [(zoom_spec(), true), (distortion_spec(), false)] {
            assert_eq!((spec.width, spec.height, spec.frames), (256, 256, 16));
            let b = render_scene(&spec, seed).map_err(|e| e.to_string())?;
            let reversed: Vec<FlowField> = b
                .optics
                .windows(2)
                .map(|w| pair_flow(&w[1], &w[0], &b.intrinsics).0)
                .collect();
            if is_zoom {
                let s = b.zoom_scales();
                zoom_fwd.push(zoomsim_clip(&b.flows, &s, &b.intrinsics, &cfg).map_err(|e| e.to_string())?.score);
                zoom_rev.push(zoomsim_clip(&reversed, &s, &b.intrinsics, &cfg).map_err(|e| e.to_string())?.score);
            } else {
                let d = b.distortions();
                dist_fwd.push(distortsim_clip(&b.flows, &d, &b.intrinsics, &cfg).map_err(|e| e.to_string())?.score);
                dist_rev.push(distortsim_clip(&reversed, &d, &b.intrinsics, &cfg).map_err(|e| e.to_string())?.score);
            }
        }
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let el = start.elapsed();
    check(
        min(&zoom_fwd) > 0.99
            && min(&dist_fwd) > 0.95
            && max(&zoom_rev) < -0.95
            && max(&dist_rev) < -0.95
            && el < Duration::from_secs(120),
        format!(
            "ZoomSim min {:.4}, DistortSim min {:.4}, reversed max {:.4} / {:.4} over 20+20 clips; {}",
            min(&zoom_fwd),
            min(&dist_fwd),
            max(&zoom_rev),
            max(&dist_rev),
            within(el, Duration::from_secs(120))
        ),
    )
}

#[allow(clippy::approx_constant)]
fn flowsim_algebra() -> Outcome {
    let cfg = FlowSimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let field = FlowField::from_fn(64, 48, |_, _| {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let m = rng.random_range(10.0..40.0);
        [m * a.cos(), m * a.sin()]
    });
    let other = FlowField::from_fn(64, 48, |x, y| {
        let [u, v] = field.get(x, y);
        [u as f64 + 1.5 * (y as f64 * 0.3).sin(), v as f64 - 1.5]
    });
    let sim = |a: &FlowField, b: &FlowField| flowsim(a, b, &cfg).map(|r| r.score).map_err(|e| e.to_string());
    let own = sim(&field, &field)?;
    let anti = sim(&field, &field.negated())?;
    let diag = sim(&FlowField::constant(32, 32, 1.0, 0.0), &FlowField::constant(32, 32, 1.0, 1.0))?;
    let base = sim(&field, &other)?;
    let mut worst_scale = 0f64;
    for lambda in [0.1f32, 10.0] {
        worst_scale = worst_scale.max((sim(&field, &other.scaled(lambda))? - base).abs());
        worst_scale = worst_scale.max((sim(&field.scaled(lambda), &other)? - base).abs());
    }
    let cos45 = std::f64::consts::FRAC_1_SQRT_2;
    check(
        (own - 1.0).abs() < 1e-6 && (anti + 1.0).abs() < 1e-6 && (diag - cos45).abs() < 1e-6 && worst_scale < 1e-6,
        format!(
            "self {own:.9}, negated {anti:.9}, 45deg {diag:.9} (cos 45 = {cos45:.9}, |diff from 0.7071| = {:.2e}), \
             scale drift {worst_scale:.2e}",
            (diag - 0.7071).abs()
        ),
    )
}

fn two_plane_frame() -> Frame {
    let spec: SceneSpec =
        serde_json::from_str(include_str!("../specs/bokeh_two_plane.json")).expect("bokeh spec");
    spec.base_frame(11)
}

/// Disc average over the whole frame, radius from the disparity gap to the
/// focus pixel.
fn brute_bokeh(frame: &Frame, alpha: f64, fu: usize, fv: usize, settings: &BokehSettings) -> Image {
    let img = &frame.pixels;
    let disp = frame.disparity.as_ref().unwrap();
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let d_in = disp.get(fu, fv, 0) as f64;
    Image::from_fn(w, h, ch, |x, y, c| {
        let r = (settings.gain * alpha * (disp.get(x, y, 0) as f64 - d_in).abs()).min(settings.cap);
        if r <= 0.0 {
            return img.get(x, y, c);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for sy in 0..h {
            for sx in 0..w {
                let dist = ((sx as f64 - x as f64).powi(2) + (sy as f64 - y as f64).powi(2)).sqrt();
                let wgt = (r + 0.5 - dist).clamp(0.0, 1.0);
                num += wgt * img.get(sx, sy, c) as f64;
                den += wgt;
            }
        }
        (num / den) as f32
    })
}

fn bokeh() -> Outcome {
    let frame = two_plane_frame();
    let settings = BokehSettings::default();
    let (fu, fv) = (32usize, 64usize);
    let mut areas = Vec::new();
    let mut identity = false;
    for alpha in [0.0, 30.0, 100.0] {
        let (out, radii) = bokeh_render(&frame, &Aperture::new(alpha, fu as f64, fv as f64), &settings)
            .map_err(|e| e.to_string())?;
        if alpha == 0.0 {
            let a: Vec<u32> = out.pixels.as_slice().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = frame.pixels.as_slice().iter().map(|v| v.to_bits()).collect();
            identity = a == b;
        }
        areas.push(focus_area(radii.as_slice(), FOCUS_THRESHOLD));
    }
    let monotone = areas.windows(2).all(|w| w[1] <= w[0]) && areas[2] < areas[0];

    // oracle on a crop small enough for the full-frame scan
    let crop = |img: &Image| Image::from_fn(40, 24, img.channels(), |x, y, c| img.get(x + 12, y + 50, c));
    let small = Frame::with_disparity(crop(&frame.pixels), crop(frame.disparity.as_ref().unwrap()))
        .map_err(|e| e.to_string())?;
    let mut worst = 0f64;
    for alpha in [10.0, 30.0, 100.0] {
        let (out, _) = bokeh_render(&small, &Aperture::new(alpha, 8.0, 10.0), &settings).map_err(|e| e.to_string())?;
        let want = brute_bokeh(&small, alpha, 8, 10, &settings);
        for (a, b) in out.pixels.as_slice().iter().zip(want.as_slice()) {
            worst = worst.max((a - b).abs() as f64);
        }
    }
    check(
        identity && monotone && worst < 1e-5,
        format!(
            "alpha=0 byte-identical {identity}; focus_area at alpha 0/30/100 = {:.4}/{:.4}/{:.4}; \
             max gap to brute-force disc average {worst:.2e}",
            areas[0], areas[1], areas[2]
        ),
    )
}

fn stamped(rot: &[Matrix3<f64>], pos: &[Vector3<f64>]) -> PoseTrajectory<f64> {
    PoseTrajectory::new(
        rot.iter()
            .zip(pos)
            .enumerate()
            .map(|(i, (r, p))| StampedPose {
                timestamp: i as f64 * 0.1,
                rotation: *r,
                position: *p,
            })
            .collect(),
    )
    .expect("increasing timestamps")
}

fn e<T>(r: akira_kit::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn trajectory_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 40;
    let rot: Vec<Matrix3<f64>> = (0..n).map(|_| random_rotation(&mut rng)).collect();
    // dyadic coordinates keep every sum and difference exact
    let pos: Vec<Vector3<f64>> = (0..n)
        .map(|i| Vector3::new((i % 7) as f64 * 0.5, (i * i % 11) as f64 * 0.25, i as f64 * 0.125))
        .collect();
    let reference = stamped(&rot, &pos);

    let id_rpe = e(rpe(&reference, &reference, RpeMode::Delta))?;
    let id_ape = e(ape(&reference, &reference))?;
    let identity = max_of(&id_rpe.trans_terms) + max_of(&id_rpe.rot_terms) + max_of(&id_ape.trans_terms) + max_of(&id_ape.rot_terms);

    let mut scaled_worst = 0f64;
    for lambda in [0.1, 2.0, 10.0] {
        let est = e(scale_correct(&reference.scaled(lambda), &reference))?;
        scaled_worst = scaled_worst.max(e(rpe(&est, &reference, RpeMode::Delta))?.trans);
    }

    // (a) one displaced middle pose
    let mut bumped = pos.clone();
    bumped[n / 2] += Vector3::new(0.5, -0.2, 0.1);
    let mut turned = rot.clone();
    turned[n / 2] = yaw(0.3) * turned[n / 2];
    let corrupted = stamped(&turned, &bumped);
    let rpe_terms = e(rpe(&corrupted, &reference, RpeMode::Delta))?.nonzero_terms();
    let ape_terms = e(ape(&corrupted, &reference))?.nonzero_terms();
    let local = rpe_terms == vec![n / 2 - 1, n / 2] && ape_terms == vec![n / 2];

    // (b) one bad relative step in a chained trajectory
    let chained: Vec<Vector3<f64>> = pos
        .iter()
        .enumerate()
        .map(|(i, p)| if i > 5 { p + Vector3::new(0.5, 0.0, 0.0) } else { *p })
        .collect();
    let drift = stamped(&rot, &chained);
    let rpe_b = e(rpe(&drift, &reference, RpeMode::Delta))?.nonzero_terms();
    let ape_b = e(ape(&drift, &reference))?.nonzero_terms();
    let drift_ok = rpe_b == vec![5] && ape_b == (6..n).collect::<Vec<_>>();

    let yawed: Vec<Matrix3<f64>> = rot.iter().map(|r| yaw(10f64.to_radians()) * r).collect();
    let yaw_ape = e(ape(&stamped(&yawed, &pos), &reference))?;
    let yaw_err = yaw_ape.rot_terms.iter().fold(0f64, |m, r| m.max((r - 10.0).abs()));

    check(
        identity == 0.0 && scaled_worst < 1e-9 && local && drift_ok && (yaw_ape.rot_deg - 10.0).abs() < 1e-6 && yaw_err < 1e-6,
        format!(
            "identity sum {identity:e}; scaled RPE-t max {scaled_worst:.2e}; displaced pose: RPE terms {rpe_terms:?}, \
             APE terms {ape_terms:?}; bad step: RPE terms {rpe_b:?}, APE terms {} of {n}; yaw APE-rot {:.9} deg",
            ape_b.len(),
            yaw_ape.rot_deg
        ),
    )
}

fn dropout() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        let f = sample_dropout(&mut rng, 0.2).map_err(|e| e.to_string())?;
        counts[0] += f.bokeh as usize;
        counts[1] += f.distortion as usize;
        counts[2] += f.zoom as usize;
    }
    let rates: Vec<f64> = counts.iter().map(|c| *c as f64 / trials as f64).collect();
    check(
        rates.iter().all(|r| (r - 0.04).abs() <= 0.005),
        format!("bokeh {:.4}, distortion {:.4}, zoom {:.4}", rates[0], rates[1], rates[2]),
    )
}

fn akira(args: &[&str], threads: usize) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_akira"))
        .args(["--seed", "42", "--threads", &threads.to_string()])
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("akira {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn digests(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable output").flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = fs::read(&p).expect("readable output file");
                let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), hex);
            }
        }
    }
    out
}

fn run_all_commands(root: &Path, threads: usize) -> Result<(), String> {
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    for b in ["zoom_only", "distortion_only", "bokeh_two_plane", "dolly_zoom"] {
        akira(&["synth", "--builtin", b, "--output", &s(root.join(b))], threads)?;
    }
    let zoom = root.join("zoom_only");
    let dist = root.join("distortion_only");
    let bokeh = root.join("bokeh_two_plane");
    let dolly = root.join("dolly_zoom");
    let reports = root.join("reports");
    fs::create_dir_all(&reports).map_err(|e| e.to_string())?;
    akira(&["augment", "--input", &s(bokeh.clone()), "--output", &s(root.join("augmented")), "--p", "1"], threads)?;
    akira(&["cameramap", "--params", &s(dolly.join("params.jsonl")), "--output", &s(reports.join("dolly.akmp"))], threads)?;
    akira(
        &["flowsim", "--ref", &s(zoom.join("flow")), "--gen", &s(dist.join("flow")), "--report", &s(reports.join("flowsim.json"))],
        threads,
    )?;
    akira(
        &["zoomsim", "--gen", &s(zoom.join("flow")), "--params", &s(zoom.join("params.jsonl")), "--report", &s(reports.join("zoomsim.json"))],
        threads,
    )?;
    akira(
        &["distortsim", "--gen", &s(dist.join("flow")), "--params", &s(dist.join("params.jsonl")), "--report", &s(reports.join("distortsim.json"))],
        threads,
    )?;
    akira(&["focusarea", "--blur", &s(bokeh.join("blur")), "--report", &s(reports.join("focus.json"))], threads)?;
    akira(
        &["rpe", "--est", &s(dolly.join("traj.tum")), "--ref", &s(dolly.join("traj.tum")), "--ape", "--se3", "--report", &s(reports.join("rpe.json"))],
        threads,
    )?;
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [(1usize, "one"), (4, "four"), (4, "again")];
    let mut sets = Vec::new();
    for (threads, name) in runs {
        let root = tmp.path().join(name);
        run_all_commands(&root, threads)?;
        sets.push(digests(&root));
    }
    let files = sets[0].len();
    let differing: Vec<String> = sets[0]
        .iter()
        .filter(|(k, v)| sets[1..].iter().any(|s| s.get(*k) != Some(*v)))
        .map(|(k, _)| k.display().to_string())
        .collect();
    check(
        differing.is_empty() && sets.iter().all(|s| s.len() == files) && files > 0,
        format!("{files} output files from 9 commands, identical sha256 at 1 and 4 threads and on rerun; differing: {differing:?}"),
    )
}

fn format_fidelity() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let specials = [f32::MIN_POSITIVE, -0.0, 1e-38, f32::MAX, -f32::MAX, 1.0e9];
    let mut i = 0;
    let field = FlowField::from_fn(37, 23, |_, _| {
        i += 1;
        if i % 50 == 0 {
            [specials[(i / 50) % specials.len()] as f64, 0.0]
        } else {
            [rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)]
        }
    });
    let path = tmp.path().join("a.flo");
    write_flo(&path, &field).map_err(|e| e.to_string())?;
    let bytes = fs::read(&path).map_err(|e| e.to_string())?;
    let back = read_flo(&path).map_err(|e| e.to_string())?;
    let bit_exact = back.width() == 37
        && back.height() == 23
        && back.as_slice().iter().zip(field.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let header_ok = &bytes[0..4] == b"PIEH"
        && magic == 202021.25
        && i32::from_le_bytes(bytes[4..8].try_into().unwrap()) == 37
        && i32::from_le_bytes(bytes[8..12].try_into().unwrap()) == 23
        && bytes.len() == 12 + 37 * 23 * 8;

    // hand-built Middlebury file, row-major interleaved u,v
    let mut foreign = Vec::new();
    foreign.extend_from_slice(&202021.25f32.to_le_bytes());
    foreign.extend_from_slice(&2i32.to_le_bytes());
    foreign.extend_from_slice(&1i32.to_le_bytes());
    for v in [1.5f32, -2.0, 0.25, 8.0] {
        foreign.extend_from_slice(&v.to_le_bytes());
    }
    let fpath = tmp.path().join("b.flo");
    fs::write(&fpath, &foreign).map_err(|e| e.to_string())?;
    let f = read_flo(&fpath).map_err(|e| e.to_string())?;
    let interop = f.get(0, 0) == [1.5, -2.0] && f.get(1, 0) == [0.25, 8.0];

    let good = "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0.7071067811865476 0.7071067811865476\n";
    let off = "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1.002\n";
    let near = "0 0 0 0 0 0 0 1.0009\n";
    let accepts = parse_tum(good).is_ok() && parse_tum(near).is_ok();
    let rejects = parse_tum(off).map(|_| ()).map_err(|(o, m)| format!("offset {o}: {m}"));
    check(
        bit_exact && header_ok && interop && accepts && rejects.is_err(),
        format!(
            "bit-exact {bit_exact}, PIEH header {header_ok}, foreign file read {interop}, \
             unit quaternions accepted {accepts}, |q|=1.002 rejected: {:?}",
            rejects.err()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("plucker correctness", plucker),
        ("distortion round-trip", distortion_round_trip),
        ("zoom equivalence", zoom_equivalence),
        ("optical-consistency closure", closure),
        ("flowsim algebra", flowsim_algebra),
        ("bokeh", bokeh),
        ("trajectory metrics", trajectory_metrics),
        ("dropout statistics", dropout),
        ("determinism", determinism),
        ("format fidelity", format_fidelity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
