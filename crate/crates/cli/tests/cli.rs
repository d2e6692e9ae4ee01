use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use denoiselab::dataset::{empirical_stats, read_container, DataMatrix};
use denoiselab::denoise::{affine_denoise, AffineDenoiser};
use denoiselab::distill::{distill_linear, DistillConfig};
use denoiselab::denoise::MultiDeltaDenoiser;
use denoiselab::rng;
use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_denoiselab");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("DENOISELAB_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_csv(path: &Path, rows: &DMatrix<f64>) {
    let mut text = String::new();
    for row in rows.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn clusters(seed: u64, n: usize, d: usize, center: f64, spread: f64) -> DMatrix<f64> {
    let mut r = rng::seeded(seed);
    DMatrix::from_fn(n, d, |i, _| {
        let c = if i % 2 == 0 { center } else { -center };
        (c + spread * rng::normal(&mut r)).clamp(-1.0, 1.0)
    })
}

/// Rows come in `x, -x` pairs so the mean is exactly zero.
fn centered(seed: u64, pairs: usize, d: usize) -> DMatrix<f64> {
    let mut r = rng::seeded(seed);
    let mut m = DMatrix::zeros(2 * pairs, d);
    for i in 0..pairs {
        for j in 0..d {
            let v = 0.5 * rng::normal(&mut r).tanh();
            m[(2 * i, j)] = v;
            m[(2 * i + 1, j)] = -v;
        }
    }
    m
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn read_matrix_csv(path: &Path) -> DMatrix<f64> {
    let text = fs::read_to_string(path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn series_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_in(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn assert_same_tree(a: &Path, b: &Path) {
    let fa = files_in(a);
    let fb = files_in(b);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(a).unwrap(), y.strip_prefix(b).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn stats_two_point_eigenvalues() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.csv"), "1,0\n-1,0\n").unwrap();
    ok(dir.path(), &["stats", "--data", "two.csv", "--out", "s"]);
    let text = fs::read_to_string(dir.path().join("s/eigvals.csv")).unwrap();
    let vals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    assert!((vals[0] - 1.0).abs() < 1e-12, "{vals:?}");
    assert_eq!(vals[1], 0.0);
    let basis = read_container(&dir.path().join("s/basis.f64")).unwrap();
    assert_eq!(basis.shape(), (2, 2));
    assert!((basis[(0, 0)].abs() - 1.0).abs() < 1e-12);
    let manifest = json(&dir.path().join("s/manifest.json"));
    assert_eq!(manifest["subcommand"], "stats");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["inputs"][0]["path"], "two.csv");
    assert_eq!(manifest["formats"]["data-container"], "DDL1");
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["stats", "--data", "absent/nope.csv", "--out", "s"]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert_eq!(msg.trim_end().lines().count(), 1, "{msg}");
    assert!(msg.contains("absent/nope.csv"), "{msg}");
}

#[test]
fn out_of_range_data_is_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "0.5,2\n").unwrap();
    let out = run_in(dir.path(), &["stats", "--data", "bad.csv", "--out", "s"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("bad.csv"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(1, 12, 3, 0.5, 0.2));
    let args = |out: &'static str| ["sample", "--data", "x.csv", "--denoiser", "multi-delta", "--count", "3", "--seed", "7", "--steps", "20", "--out", out];
    ok(dir.path(), &args("a"));
    ok(dir.path(), &args("b"));
    assert_same_tree(&dir.path().join("a"), &dir.path().join("b"));
    ok(dir.path(), &["rerun", "a/manifest.json", "--out", "c"]);
    assert_same_tree(&dir.path().join("a"), &dir.path().join("c"));
    // Rerunning in place rewrites the same bytes.
    let before = fs::read(dir.path().join("a/samples.f64")).unwrap();
    ok(dir.path(), &["rerun", "a/manifest.json"]);
    assert_eq!(fs::read(dir.path().join("a/samples.f64")).unwrap(), before);
    let out = run_in(dir.path(), &["stats", "--config", "a/manifest.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn seeds_change_samples() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(1, 12, 3, 0.5, 0.2));
    ok(dir.path(), &["sample", "--data", "x.csv", "--count", "2", "--seed", "1", "--out", "a"]);
    ok(dir.path(), &["sample", "--data", "x.csv", "--count", "2", "--seed", "2", "--out", "b"]);
    assert_ne!(fs::read(dir.path().join("a/samples.f64")).unwrap(), fs::read(dir.path().join("b/samples.f64")).unwrap());
}

#[test]
fn environment_sets_default_output_directory() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.csv"), "1,0\n-1,0\n").unwrap();
    let out = Command::new(BIN)
        .args(["stats", "--data", "two.csv"])
        .current_dir(dir.path())
        .env("DENOISELAB_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from-env/eigvals.csv").is_file());
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(2, 10, 2, 0.5, 0.2));
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"data": "x.csv", "count": 2, "steps": 5, "seed": 3, "trajectories": false}"#,
    )
    .unwrap();
    ok(dir.path(), &["sample", "--config", "cfg.json", "--count", "4", "--out", "o"]);
    let samples = read_matrix_csv(&dir.path().join("o/samples.csv"));
    assert_eq!(samples.nrows(), 4);
    assert!(!dir.path().join("o/trajectories").exists());
    let manifest = json(&dir.path().join("o/manifest.json"));
    assert_eq!(manifest["flags"]["steps"], 5);
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn sample_count_zero_is_usage_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.csv"), "1,0\n-1,0\n").unwrap();
    let out = run_in(dir.path(), &["sample", "--data", "two.csv", "--count", "0", "--out", "o"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn trajectories_have_one_row_per_level() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(3, 8, 2, 0.5, 0.2));
    ok(dir.path(), &["sample", "--data", "x.csv", "--count", "2", "--steps", "6", "--out", "o"]);
    let text = fs::read_to_string(dir.path().join("o/trajectories/traj_00001.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 7);
    assert!(lines[0].starts_with("step,sigma"));
}

/// Euler is first order, so the gap to the closed-form path shrinks like
/// 1/n; 8000 steps puts it well inside 1e-3 on this fixture.
#[test]
fn gaussian_ode_matches_closed_form_trajectory() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(3, 64, 16, 0.6, 0.15));
    let common = ["--data", "x.csv", "--steps", "8000", "--count", "4", "--seed", "11", "--trajectories", "false"];
    let mut a = vec!["sample", "--denoiser", "gaussian", "--out", "ode"];
    a.extend(common);
    let mut b = vec!["sample", "--closed-form", "--out", "exact"];
    b.extend(common);
    ok(dir.path(), &a);
    ok(dir.path(), &b);
    let ode = read_matrix_csv(&dir.path().join("ode/samples.csv"));
    let exact = read_matrix_csv(&dir.path().join("exact/samples.csv"));
    let gap = (ode - exact).abs().max();
    assert!(gap < 1e-3, "max gap {gap}");
}

#[test]
fn multi_delta_samples_reproduce_training_rows() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("tiny.csv"), &clusters(4, 6, 4, 0.5, 0.3));
    ok(
        dir.path(),
        &["sample", "--data", "tiny.csv", "--denoiser", "multi-delta", "--steps", "100", "--count", "20", "--out", "o"],
    );
    let summary = json(&dir.path().join("o/summary.json"));
    for entry in summary["nearest"].as_array().unwrap() {
        assert!(entry["relative"].as_f64().unwrap() < 1e-2, "{entry}");
    }
    assert!(summary["gl"]["value"].as_f64().unwrap() < 0.05);
}

#[test]
fn distill_report_and_checkpoint_round_trip() {
    let dir = TempDir::new().unwrap();
    let x = clusters(3, 64, 16, 0.6, 0.15);
    write_csv(&dir.path().join("x.csv"), &x);
    ok(
        dir.path(),
        &["distill", "--data", "x.csv", "--teacher", "multi-delta", "--sigmas", "1", "--steps", "5000", "--seed", "5", "--out", "o"],
    );
    let report = json(&dir.path().join("o/report.json"));
    let level = &report["levels"][0];
    assert_eq!(level["sigma"], 1.0);
    let nmse = level["weight_nmse_vs_closed_form"].as_f64().unwrap();
    assert!(nmse < 0.05, "weight NMSE {nmse}");
    let losses = fs::read_to_string(dir.path().join("o/loss_000.csv")).unwrap();
    assert_eq!(losses.lines().count(), 1 + 5000);

    // Re-fit in memory with the seed the CLI derives for level 0.
    let data = DataMatrix::new(x).unwrap();
    let cfg = DistillConfig {
        steps: 5000,
        batch: 64,
        lr: 1e-2,
        seed: rng::derive_seed(5, 0),
        adam: true,
        lr_decay: true,
    };
    let fit = distill_linear(&MultiDeltaDenoiser::new(data.clone()), &data, 1.0, &cfg).unwrap();
    let loaded = AffineDenoiser::load(&dir.path().join("o/affine_000.aff")).unwrap();
    let mut r = rng::seeded(9);
    for _ in 0..5 {
        let probe = rng::normal_vector(&mut r, 16, 1.0);
        let a = affine_denoise(&fit.denoiser, &probe).unwrap();
        let b = affine_denoise(&loaded, &probe).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}

#[test]
fn bad_checkpoint_magic_is_reported() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.csv"), "1,0\n-1,0\n").unwrap();
    fs::write(dir.path().join("bad.aff"), b"NOPE\x00\x00\x00\x00").unwrap();
    let out = run_in(dir.path(), &["sample", "--data", "two.csv", "--denoiser", "affine:bad.aff", "--out", "o"]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("bad magic") && msg.contains("bad.aff"), "{msg}");
    let out = run_in(dir.path(), &["sample", "--data", "two.csv", "--denoiser", "toy:bad.aff", "--out", "o"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("bad magic"));
}

#[test]
fn identical_denoisers_give_zero_score_difference() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(5, 20, 4, 0.5, 0.2));
    ok(
        dir.path(),
        &["metrics", "--metric", "score-diff", "--data", "x.csv", "--denoiser", "gaussian", "--reference", "gaussian", "--n", "20", "--out", "o"],
    );
    let values = series_values(&dir.path().join("o/score-diff-rmse.csv"));
    assert_eq!(values.len(), 10);
    assert!(values.iter().all(|v| *v == 0.0), "{values:?}");
    let series = json(&dir.path().join("o/score-diff-rmse.json"));
    assert_eq!(series["n"], 20);
}

#[test]
fn centered_gaussian_denoiser_is_linear() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("c.csv"), &centered(6, 10, 5));
    ok(dir.path(), &["metrics", "--metric", "linearity", "--data", "c.csv", "--n", "30", "--svg", "--out", "o"]);
    let values = series_values(&dir.path().join("o/linearity-cosine.csv"));
    assert!(values.iter().all(|v| (v - 1.0).abs() < 1e-9), "{values:?}");
    let svg = fs::read_to_string(dir.path().join("o/linearity-cosine.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 1);
}

#[test]
fn plot_is_well_formed_with_one_polyline_per_series() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(7, 16, 3, 0.5, 0.2));
    ok(dir.path(), &["metrics", "--metric", "linearity", "--data", "x.csv", "--denoiser", "multi-delta", "--n", "10", "--out", "m1"]);
    ok(dir.path(), &["metrics", "--metric", "linearity", "--variant", "nmse", "--data", "x.csv", "--n", "10", "--out", "m2"]);
    ok(
        dir.path(),
        &["plot", "--series", "m1/linearity-cosine.csv,m2/linearity-nmse.csv", "--title", "A & B", "--out", "p"],
    );
    let svg = fs::read_to_string(dir.path().join("p/plot.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);
    let manifest = json(&dir.path().join("p/manifest.json"));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn gl_of_training_rows_is_zero() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(8, 10, 3, 0.5, 0.2));
    ok(dir.path(), &["metrics", "--metric", "gl", "--data", "x.csv", "--samples", "x.csv", "--out", "o"]);
    let gl = json(&dir.path().join("o/gl.json"));
    assert_eq!(gl["value"], 0.0);
    assert_eq!(gl["generalizes"], false);
}

#[test]
fn external_plugin_matches_in_process_denoiser() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(9, 24, 3, 0.5, 0.2));
    let plugin = format!("external:\"{BIN}\" serve-plugin --target gaussian --data x.csv");
    let base = ["sample", "--data", "x.csv", "--count", "3", "--steps", "12", "--trajectories", "false"];
    let mut a = base.to_vec();
    a.extend(["--denoiser", "gaussian", "--out", "local"]);
    let mut b = base.to_vec();
    b.extend(["--denoiser", plugin.as_str(), "--out", "remote"]);
    ok(dir.path(), &a);
    ok(dir.path(), &b);
    assert_eq!(
        fs::read(dir.path().join("local/samples.f64")).unwrap(),
        fs::read(dir.path().join("remote/samples.f64")).unwrap()
    );

    let echo = format!("external:\"{BIN}\" serve-plugin --target echo");
    ok(dir.path(), &["metrics", "--metric", "linearity", "--data", "x.csv", "--denoiser", &echo, "--n", "5", "--out", "e"]);
    let values = series_values(&dir.path().join("e/linearity-cosine.csv"));
    assert!(values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn plugin_dimension_mismatch_exits_with_plugin_code() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(9, 8, 3, 0.5, 0.2));
    write_csv(&dir.path().join("y.csv"), &clusters(9, 8, 2, 0.5, 0.2));
    let plugin = format!("external:\"{BIN}\" serve-plugin --target gaussian --data y.csv");
    let out = run_in(dir.path(), &["sample", "--data", "x.csv", "--denoiser", &plugin, "--count", "1", "--out", "o"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let out = run_in(dir.path(), &["sample", "--data", "x.csv", "--denoiser", "external:/nonexistent/plugin", "--out", "o"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn theorem1_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["verify", "--suite", "theorem1", "--out", "v"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS theorem1"));
    let report = json(&dir.path().join("v/report.json"));
    assert_eq!(report["pass"], true);
    for level in report["details"]["levels"].as_array().unwrap() {
        assert!(level["weight_nmse"].as_f64().unwrap() < 1e-3);
        assert!(level["bias_relative_error"].as_f64().unwrap() < 1e-3);
    }
}

#[test]
fn negative_tolerance_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["verify", "--suite", "theorem1", "--tolerance", "-1e-3", "--out", "v"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("v/report.json").exists());
}

#[test]
fn trajectory_suite_converges_and_exit_code_tracks_verdict() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["verify", "--suite", "trajectory", "--out", "v"]);
    let report = json(&dir.path().join("v/report.json"));
    assert_eq!(code(&out), if report["pass"] == true { 0 } else { 1 });
    for errs in report["details"]["relative_errors"].as_array().unwrap() {
        let e: Vec<f64> = errs.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }
    ok(dir.path(), &["verify", "--suite", "trajectory", "--steps", "4000", "--out", "fine"]);
}

#[test]
fn memorize_and_orthogonality_suites_pass() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["verify", "--suite", "memorize", "--out", "m"]);
    ok(dir.path(), &["verify", "--suite", "orthogonality", "--out", "o"]);
    let report = json(&dir.path().join("o/report.json"));
    assert!(report["details"]["levels"][0]["zero_map"].as_f64().unwrap() > 0.3);
}

#[test]
fn trained_toy_bank_loads_and_samples() {
    let dir = TempDir::new().unwrap();
    write_csv(&dir.path().join("x.csv"), &clusters(10, 16, 3, 0.5, 0.2));
    let args = ["train-toy", "--data", "x.csv", "--sigmas", "0.1,1,10", "--hidden", "8", "--steps", "50", "--batch", "8", "--val-size", "8"];
    let mut a = args.to_vec();
    a.extend(["--out", "bank"]);
    ok(dir.path(), &a);
    let mut b = args.to_vec();
    b.extend(["--out", "bank2"]);
    ok(dir.path(), &b);
    assert_same_tree(&dir.path().join("bank"), &dir.path().join("bank2"));
    let index = json(&dir.path().join("bank/bank.json"));
    assert_eq!(index["members"].as_array().unwrap().len(), 3);
    let losses = fs::read_to_string(dir.path().join("bank/loss_000.csv")).unwrap();
    assert_eq!(losses.lines().count(), 1 + 51);

    ok(dir.path(), &["sample", "--data", "x.csv", "--denoiser", "toy:bank", "--count", "2", "--steps", "8", "--out", "s1"]);
    ok(dir.path(), &["sample", "--data", "x.csv", "--denoiser", "toy:bank/toy_001.toy", "--count", "2", "--steps", "8", "--out", "s2"]);
    let s = read_matrix_csv(&dir.path().join("s1/samples.csv"));
    assert!(s.iter().all(|v| v.is_finite()));
    let out = run_in(dir.path(), &["train-toy", "--data", "x.csv", "--mode", "resnet", "--out", "bad"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn jacobian_of_gaussian_denoiser_has_wiener_gains() {
    let dir = TempDir::new().unwrap();
    let x = clusters(11, 40, 4, 0.4, 0.3);
    write_csv(&dir.path().join("x.csv"), &x);
    ok(dir.path(), &["jacobian", "--data", "x.csv", "--sigma", "0.3", "--k", "4", "--out", "j"]);
    let report = json(&dir.path().join("j/jacobian.json"));
    let got: Vec<f64> = report["singular_values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let stats = empirical_stats(&DataMatrix::new(x).unwrap()).unwrap();
    let want: DVector<f64> = stats.shrinkage(0.3);
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() < 1e-6, "{got:?} vs {want:?}");
    }
    let left = read_container(&dir.path().join("j/jacobian.left.f64")).unwrap();
    assert_eq!(left.shape(), (4, 4));
    let manifest = json(&dir.path().join("j/manifest.json"));
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o == "jacobian.right.f64"));
}

#[test]
fn unknown_denoiser_is_usage_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.csv"), "1,0\n-1,0\n").unwrap();
    let out = run_in(dir.path(), &["sample", "--data", "two.csv", "--denoiser", "wiener", "--out", "o"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr(&out).trim_end().lines().count(), 1);
}
