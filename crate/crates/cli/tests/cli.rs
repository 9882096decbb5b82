use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use akira_kit::camera::read_params_jsonl;
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn akira(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akira"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = akira(args);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{args:?}: {err}");
    assert!(err.trim_end().ends_with("status: ok"), "{err}");
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let out = akira(args);
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(out.status.code(), Some(code), "{args:?}: {err}");
    assert!(err.contains(&format!("status: failed (exit {code})")), "{err}");
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, builtin: &str, seed: &str) -> PathBuf {
    let out = dir.join(builtin);
    ok(&["--seed", seed, "synth", "--builtin", builtin, "--output", s(&out)]);
    out
}

fn sha(path: &Path) -> String {
    Sha256::digest(fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

fn tree(root: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), sha(&p)));
            }
        }
    }
    out.sort();
    out
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn builtin_specs_generate_and_reproduce() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for name in ["zoom_only", "distortion_only", "bokeh_two_plane", "dolly_zoom"] {
        let x = synth(a.path(), name, "5");
        let y = synth(b.path(), name, "5");
        assert!(!x.join("FAILED").exists());
        let tx = tree(&x);
        assert!(tx.iter().any(|(p, _)| p.ends_with("traj.tum")));
        assert_eq!(tx, tree(&y), "{name}");
    }
}

#[test]
fn missing_seed_is_generated_and_printed() {
    let tmp = TempDir::new().unwrap();
    let out = akira(&["synth", "--builtin", "bokeh_two_plane", "--output", s(&tmp.path().join("b"))]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(generated; pass --seed"), "{err}");
}

#[test]
fn zero_probability_echoes_the_clip() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "bokeh_two_plane", "2");
    let out = tmp.path().join("aug");
    ok(&["--seed", "3", "augment", "--input", s(&input), "--output", s(&out), "--p", "0"]);
    for e in fs::read_dir(input.join("frames")).unwrap().flatten() {
        let name = e.file_name();
        assert_eq!(fs::read(e.path()).unwrap(), fs::read(out.join("frames").join(&name)).unwrap());
    }
    assert_eq!(
        read_params_jsonl(input.join("params.jsonl")).unwrap(),
        read_params_jsonl(out.join("params.jsonl")).unwrap()
    );
}

#[test]
fn augment_rerun_gives_identical_params() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "bokeh_two_plane", "2");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["--seed", "11", "augment", "--input", s(&input), "--output", s(&a), "--p", "1"]);
    ok(&["--seed", "11", "--threads", "1", "augment", "--input", s(&input), "--output", s(&b), "--p", "1"]);
    assert_eq!(sha(&a.join("params.jsonl")), sha(&b.join("params.jsonl")));
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn missing_disparity_names_the_file() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "bokeh_two_plane", "2");
    let gone = input.join("disparity").join("00001.pfm");
    fs::remove_file(&gone).unwrap();
    let out = tmp.path().join("aug");
    let err = fails(&["--seed", "1", "augment", "--input", s(&input), "--output", s(&out), "--p", "1"], 2);
    assert!(err.contains(s(&gone)), "{err}");
    assert!(out.join("FAILED").exists());
}

#[test]
fn flowsim_of_a_sequence_with_itself() {
    let tmp = TempDir::new().unwrap();
    let z = synth(tmp.path(), "zoom_only", "4");
    let flows = z.join("flow");
    let stdout = ok(&["flowsim", "--ref", s(&flows), "--gen", s(&flows)]);
    assert!(stdout.contains("100.00"), "{stdout}");
}

#[test]
fn synthetic_bundles_score_against_their_own_params() {
    let tmp = TempDir::new().unwrap();
    let z = synth(tmp.path(), "zoom_only", "4");
    let d = synth(tmp.path(), "distortion_only", "4");
    let (zr, dr) = (tmp.path().join("z.json"), tmp.path().join("d.json"));
    ok(&["zoomsim", "--gen", s(&z.join("flow")), "--params", s(&z.join("params.jsonl")), "--report", s(&zr)]);
    ok(&["distortsim", "--gen", s(&d.join("flow")), "--params", s(&d.join("params.jsonl")), "--report", s(&dr)]);
    assert!(report(&zr)["score_x100"].as_f64().unwrap() > 99.0);
    assert!(report(&dr)["score_x100"].as_f64().unwrap() > 95.0);
}

#[test]
fn bad_flo_magic_is_a_format_error() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.flo");
    let mut bytes = b"HEIP".to_vec();
    bytes.extend_from_slice(&[1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    fs::write(&bad, bytes).unwrap();
    let err = fails(&["flowsim", "--ref", s(&bad), "--gen", s(&bad)], 3);
    assert!(err.contains(s(&bad)) && err.contains("offset 0"), "{err}");
}

fn tum(path: &Path, positions: &[[f64; 3]], t0: f64) {
    let body: String = positions
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{} {} {} {} 0 0 0 1\n", t0 + i as f64, p[0], p[1], p[2]))
        .collect();
    fs::write(path, body).unwrap();
}

fn rpe_report(tmp: &Path, est: &Path, reference: &Path, extra: &[&str]) -> Value {
    let r = tmp.join("rpe.json");
    let mut args = vec!["rpe", "--est", s(est), "--ref", s(reference), "--report", s(&r)];
    args.extend_from_slice(extra);
    ok(&args);
    report(&r)
}

#[test]
fn rpe_identity_scale_and_corruption() {
    let tmp = TempDir::new().unwrap();
    let line: Vec<[f64; 3]> = (0..16).map(|i| [i as f64, 0.0, 0.5 * i as f64]).collect();
    let reference = tmp.path().join("ref.tum");
    tum(&reference, &line, 0.0);

    let same = rpe_report(tmp.path(), &reference, &reference, &["--ape"]);
    assert_eq!(same["rpe_trans"], 0.0);
    assert_eq!(same["rpe_rot_deg"], 0.0);
    assert_eq!(same["ape"]["trans"], 0.0);

    let doubled = tmp.path().join("x2.tum");
    tum(&doubled, &line.iter().map(|p| p.map(|v| 2.0 * v)).collect::<Vec<_>>(), 0.0);
    let fixed = rpe_report(tmp.path(), &doubled, &reference, &["--scale-correct"]);
    assert!(fixed["rpe_trans"].as_f64().unwrap() < 1e-12);
    assert_eq!(fixed["rpe_rot_deg"], 0.0);

    let mut bent = line.clone();
    bent[9][1] += 0.25;
    let est = tmp.path().join("bent.tum");
    tum(&est, &bent, 0.0);
    let r = rpe_report(tmp.path(), &est, &reference, &[]);
    let brute: f64 = (0..15)
        .map(|i| {
            let d: Vec<f64> = (0..3).map(|c| (bent[i + 1][c] - bent[i][c]) - (line[i + 1][c] - line[i][c])).collect();
            d.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .sum::<f64>()
        / 15.0;
    assert!((r["rpe_trans"].as_f64().unwrap() - brute).abs() < 1e-12);
    let nonzero: Vec<u64> = r["per_pair"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["trans"].as_f64().unwrap() != 0.0)
        .map(|p| p["index"].as_u64().unwrap())
        .collect();
    assert_eq!(nonzero, vec![8, 9]);
}

#[test]
fn mismatched_timestamps_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let pts: Vec<[f64; 3]> = (0..5).map(|i| [i as f64, 0.0, 0.0]).collect();
    let (a, b) = (tmp.path().join("a.tum"), tmp.path().join("b.tum"));
    tum(&a, &pts, 0.0);
    tum(&b, &pts, 0.5);
    fails(&["rpe", "--est", s(&a), "--ref", s(&b)], 2);
}

#[test]
fn unnormalized_quaternion_is_a_format_error() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.tum");
    fs::write(&a, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1.01\n").unwrap();
    let err = fails(&["rpe", "--est", s(&a), "--ref", s(&a)], 3);
    assert!(err.contains(s(&a)), "{err}");
}

#[test]
fn dolly_zoom_pulls_back_while_zooming_in() {
    let tmp = TempDir::new().unwrap();
    let d = synth(tmp.path(), "dolly_zoom", "8");
    let params = read_params_jsonl(d.join("params.jsonl")).unwrap();
    let fx: Vec<f64> = params.iter().map(|p| p.fx).collect();
    let dist: Vec<f64> = params
        .iter()
        .map(|p| p.translation.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    assert!(fx.windows(2).all(|w| w[1] > w[0]), "{fx:?}");
    assert!(dist.windows(2).all(|w| w[1] > w[0]), "{dist:?}");
    let check = report(&d.join("dolly_check.json"));
    assert_eq!(check["direction_varies"], true);
    assert_eq!(check["moment_varies"], true);
}

#[test]
fn cameramap_writes_atomically_and_validates() {
    let tmp = TempDir::new().unwrap();
    let d = synth(tmp.path(), "dolly_zoom", "8");
    let out = tmp.path().join("maps.akmp");
    ok(&["cameramap", "--params", s(&d.join("params.jsonl")), "--output", s(&out)]);
    let maps = akira_kit::camera::read_camera_maps(&out).unwrap();
    assert_eq!(maps.len(), 12);
    assert!(!tmp.path().join("maps.akmp.partial").exists());

    let broken = tmp.path().join("broken.jsonl");
    fs::write(&broken, "{\"fx\": 1}\n").unwrap();
    fails(&["cameramap", "--params", s(&broken), "--output", s(&tmp.path().join("x.akmp"))], 3);
}

#[test]
fn bad_config_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path(), "bokeh_two_plane", "2");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, "{\"p\": 1.5}").unwrap();
    fails(&["augment", "--input", s(&input), "--output", s(&tmp.path().join("o")), "--config", s(&cfg)], 2);
    fails(&["flowsim", "--ref", s(&tmp.path().join("nope")), "--gen", s(&tmp.path().join("nope"))], 3);
}
