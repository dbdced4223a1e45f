//! End-to-end tests of the `wavemod` binary: exit codes, artifact layout,
//! config precedence, and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wavemod_core::image::synthetic_scene;
use wavemod_core::splat::load_cloud;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavemod"))
}

fn scene_png(dir: &Path, size: usize) -> PathBuf {
    let path = dir.join(format!("scene{size}.png"));
    synthetic_scene(size).save_png(&path).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn dwt_round_trips_and_writes_bands() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 32);
    let out_dir = tmp.path().join("dwt");
    let out = bin()
        .args(["dwt", "--image"])
        .arg(&img)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("max reconstruction error"));
    for name in ["ll.png", "lh.png", "hl.png", "hh.png", "recon.png", "ll.f32", "lh.f32", "hl.f32", "hh.f32"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    // Half-resolution band dump: 16x16 x 3 channels x 4 bytes.
    let ll = std::fs::read(out_dir.join("ll.f32")).unwrap();
    assert_eq!(ll.len(), 16 * 16 * 3 * 4);
}

#[test]
fn dwt_rejects_missing_image_with_config_exit() {
    let out = bin()
        .args(["dwt", "--image", "/nonexistent/nope.png"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn bad_config_key_reports_line_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!("iterations = 3\nitterations = 5\nimage = {}\n", img.display()),
    )
    .unwrap();
    let out = bin().arg("train").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn duplicate_config_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 1\nseed = 2\n").unwrap();
    let out = bin().arg("train").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("duplicate"), "stderr: {}", stderr_of(&out));
}

#[test]
fn zero_iteration_train_writes_single_metrics_row() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let out_dir = tmp.path().join("run");
    let out = bin()
        .args(["train", "--mode", "vanilla", "--iterations", "0", "--image"])
        .arg(&img)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.trim_end().lines().collect();
    assert_eq!(lines.len(), 2, "header + one row, got: {metrics}");
    assert!(lines[0].starts_with("iteration,total_loss"));
    assert!(lines[1].starts_with("0,"));
    // Vanilla runs learn no filter, so no filter trace is emitted.
    assert!(!out_dir.join("filter_trace.csv").exists());
    assert!(out_dir.join("final.png").exists());
    assert!(out_dir.join("cloud.bin").exists());
}

#[test]
fn auto_train_emits_filter_trace_and_loadable_cloud() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let out_dir = tmp.path().join("run");
    let out = bin()
        .args(["train", "--mode", "auto", "--iterations", "8", "--image"])
        .arg(&img)
        .arg("--out")
        .arg(&out_dir)
        .env("WAVEMOD_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let trace = std::fs::read_to_string(out_dir.join("filter_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,h0_tap0,h0_tap1,h1_tap0,h1_tap1,frob_dist_to_ref,wavelet_loss,lambda_h"));
    let cloud = load_cloud(&out_dir.join("cloud.bin")).unwrap();
    assert!(!cloud.is_empty());
}

#[test]
fn cli_flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "mode = vanilla\niterations = 9\neval_interval = 2\nimage = {}\n",
            img.display()
        ),
    )
    .unwrap();
    let out_dir = tmp.path().join("run");
    let out = bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .args(["--iterations", "4", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let last = metrics.trim_end().lines().last().unwrap();
    assert!(last.starts_with("4,"), "CLI iteration count should win: {last}");
}

#[test]
fn identical_runs_produce_identical_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let run = |dir: &Path| {
        let out = bin()
            .args(["train", "--mode", "auto", "--iterations", "12", "--seed", "7", "--image"])
            .arg(&img)
            .arg("--out")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        std::fs::read(dir.join("metrics.csv")).unwrap()
    };
    let a = run(&tmp.path().join("a"));
    let b = run(&tmp.path().join("b"));
    assert_eq!(a, b, "metrics.csv must be byte-identical across reruns");
}

#[test]
fn compare_writes_three_row_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let img = scene_png(tmp.path(), 16);
    let out_dir = tmp.path().join("cmp");
    let out = bin()
        .args(["compare", "--iterations", "6", "--image"])
        .arg(&img)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.trim_end().lines().collect();
    assert_eq!(lines[0], "mode,psnr,ssim,peak_gaussians,wall_clock_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("vanilla,"));
    assert!(lines[2].starts_with("opti,"));
    assert!(lines[3].starts_with("auto,"));
    for mode in ["vanilla", "opti", "auto"] {
        assert!(out_dir.join(mode).join("metrics.csv").exists());
    }
}

#[test]
fn gradcheck_passes_clean_and_fails_when_corrupted() {
    let ok = bin().args(["gradcheck", "--seed", "5"]).output().unwrap();
    assert!(ok.status.success(), "stderr: {}", stderr_of(&ok));
    let text = stdout_of(&ok);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));

    let bad = bin()
        .args(["gradcheck", "--seed", "5"])
        .env("WAVEMOD_GRADCHECK_CORRUPT", "1")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout_of(&bad).contains("FAIL"));
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_scene_matches_generator() {
    let asset = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/synthetic128.png");
    let loaded = wavemod_core::image::Image::load(&asset).unwrap();
    assert_eq!(loaded.to_u8(), synthetic_scene(128).to_u8());
}
