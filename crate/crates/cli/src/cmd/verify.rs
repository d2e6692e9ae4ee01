//! Self-contained checks on synthetic data. Each suite writes `report.json`
//! and prints one PASS/FAIL line; a failed check exits with status 1.

use denoiselab::dataset::{empirical_stats, DataMatrix, GaussianStats};
use denoiselab::denoise::{AffineDenoiser, GaussianDenoiser, MultiDeltaDenoiser};
use denoiselab::distill::{closed_form_linear, dsm_curvature, orthogonality_residual, train_linear_dsm, DistillConfig};
use denoiselab::metrics::{gl_score, nearest_neighbor, weight_nmse};
use denoiselab::rng::{self, Rng};
use denoiselab::sampler::{edm_schedule, gaussian_trajectory, ode_sample};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::Run;
use crate::args::{Suite, VerifyArgs};
use crate::failure::{Failure, Outcome};

struct Verdict {
    pass: bool,
    summary: String,
    details: Value,
}

pub fn run(args: &VerifyArgs) -> Outcome {
    let tolerance = args.tolerance.unwrap_or(match args.suite {
        Suite::Theorem1 | Suite::Trajectory => 1e-3,
        Suite::Memorize => 1e-2,
        Suite::Orthogonality => 0.05,
    });
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Failure::usage(format!("--tolerance must be positive and finite, got {tolerance}")));
    }
    for (flag, v) in [("dim", args.dim), ("n-samples", args.n_samples), ("steps", args.steps), ("trials", args.trials)] {
        if v == Some(0) {
            return Err(Failure::usage(format!("--{flag} must be at least 1")));
        }
    }
    let mut run = Run::start("verify", &args.common, args)?;
    let seed = args.common.seed;
    let verdict = match args.suite {
        Suite::Theorem1 => theorem1(args, seed, tolerance)?,
        Suite::Trajectory => trajectory(args, seed, tolerance)?,
        Suite::Memorize => memorize(args, seed, tolerance)?,
        Suite::Orthogonality => orthogonality(args, seed, tolerance)?,
    };
    let name = serde_json::to_value(args.suite).unwrap_or_default();
    let label = name.as_str().unwrap_or_default().to_string();
    run.write_json(
        "report.json",
        &json!({
            "suite": name,
            "tolerance": tolerance,
            "seed": seed,
            "pass": verdict.pass,
            "summary": verdict.summary,
            "details": verdict.details,
        }),
    )?;
    run.finish()?;
    let line = format!("{} {label}: {}", if verdict.pass { "PASS" } else { "FAIL" }, verdict.summary);
    println!("{line}");
    if verdict.pass {
        Ok(())
    } else {
        Err(Failure::Verify(line))
    }
}

fn random_orthogonal(r: &mut Rng, d: usize) -> DMatrix<f64> {
    nalgebra::linalg::QR::new(DMatrix::from_fn(d, d, |_, _| rng::normal(r))).q()
}

/// `N` rows of `μ·1 + Q diag(std) z`, clamped into [-1, 1].
fn gaussian_data(seed: u64, n: usize, mean: f64, std: &[f64]) -> Outcome<DataMatrix> {
    let d = std.len();
    let mut r = rng::seeded(seed);
    let q = random_orthogonal(&mut r, d);
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let z = DVector::from_fn(d, |j, _| std[j] * rng::normal(&mut r));
        let row = &q * z;
        for j in 0..d {
            x[(i, j)] = (mean + row[j]).clamp(-1.0, 1.0);
        }
    }
    Ok(DataMatrix::new(x)?)
}

fn two_clusters(seed: u64, n: usize, d: usize, center: f64, spread: f64) -> Outcome<DataMatrix> {
    let mut r = rng::seeded(seed);
    Ok(DataMatrix::new(DMatrix::from_fn(n, d, |i, _| {
        let c = if i % 2 == 0 { center } else { -center };
        (c + spread * rng::normal(&mut r)).clamp(-1.0, 1.0)
    }))?)
}

/// Full-batch gradient descent on the denoising objective reaches the
/// closed-form linear optimum.
fn theorem1(args: &VerifyArgs, seed: u64, tol: f64) -> Outcome<Verdict> {
    let d = args.dim.unwrap_or(16);
    let n = args.n_samples.unwrap_or(2000);
    let steps = args.steps.unwrap_or(20_000);
    let std: Vec<f64> = (0..d).map(|i| 0.25 * 0.85f64.powi(i as i32)).collect();
    let x = gaussian_data(seed, n, 0.1, &std)?;
    let stats = empirical_stats(&x)?;
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut levels = Vec::new();
    for sigma in [0.1, 1.0, 10.0] {
        let cfg = DistillConfig {
            steps,
            batch: n,
            lr: 1.0 / dsm_curvature(&stats, sigma),
            seed,
            adam: false,
            lr_decay: false,
        };
        let fit = train_linear_dsm(&x, sigma, &cfg)?;
        let reference = closed_form_linear(&stats, sigma)?;
        let w = weight_nmse(&fit.denoiser.weight, &reference.weight)?;
        let b = (&fit.denoiser.bias - &reference.bias).norm() / reference.bias.norm().max(f64::MIN_POSITIVE);
        pass &= w < tol && b < tol;
        worst = worst.max(w).max(b);
        levels.push(json!({"sigma": sigma, "weight_nmse": w, "bias_relative_error": b, "lr": cfg.lr}));
    }
    Ok(Verdict {
        pass,
        summary: format!("worst weight NMSE / bias error {worst:.3e} (tol {tol:e}) over sigma 0.1, 1, 10"),
        details: json!({"dim": d, "samples": n, "steps": steps, "levels": levels}),
    })
}

/// Euler sampling with the Gaussian denoiser converges to the closed-form
/// trajectory, monotonically in the number of steps.
fn trajectory(args: &VerifyArgs, seed: u64, tol: f64) -> Outcome<Verdict> {
    let d = args.dim.unwrap_or(32);
    let trials = args.trials.unwrap_or(20);
    let finest = args.steps.unwrap_or(400);
    if finest <= 200 {
        return Err(Failure::usage("--steps must exceed 200 for the trajectory suite"));
    }
    let mut r = rng::seeded(seed);
    let eig = DVector::from_fn(d, |i, _| 0.5 * 0.85f64.powi(i as i32));
    let stats = GaussianStats::new(DVector::from_element(d, 0.05), random_orthogonal(&mut r, d), eig)?;
    let g = GaussianDenoiser::new(stats.clone());
    let counts = [10, 50, 200, finest];
    let schedules = counts
        .iter()
        .map(|&k| edm_schedule(0.002, 80.0, 7.0, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut per_trial = Vec::new();
    for t in 0..trials {
        let x_t = rng::normal_vector(&mut rng::seeded(rng::derive_seed(seed, t as u64)), d, 80.0);
        let mut errs = Vec::with_capacity(counts.len());
        for s in &schedules {
            let exact = gaussian_trajectory(&stats, &x_t, s)?;
            let euler = ode_sample(&g, s, &x_t)?;
            errs.push((euler.final_state() - exact.final_state()).norm() / exact.final_state().norm());
        }
        monotone &= errs.windows(2).all(|w| w[1] < w[0]);
        worst = worst.max(errs[counts.len() - 1]);
        per_trial.push(errs);
    }
    Ok(Verdict {
        pass: worst < tol && monotone,
        summary: format!("max relative error at {finest} steps {worst:.3e} (tol {tol:e}); strictly decreasing: {monotone}"),
        details: json!({"dim": d, "trials": trials, "steps": counts, "relative_errors": per_trial}),
    })
}

/// Sampling with the empirical-optimal denoiser reproduces training rows.
fn memorize(args: &VerifyArgs, seed: u64, tol: f64) -> Outcome<Verdict> {
    let d = args.dim.unwrap_or(16);
    let n = args.n_samples.unwrap_or(32);
    let trials = args.trials.unwrap_or(100);
    let steps = args.steps.unwrap_or(100);
    let mut r = rng::seeded(seed);
    let x = DataMatrix::new(DMatrix::from_fn(n, d, |_, _| 0.9 * rng::normal(&mut r).tanh()))?;
    let m = MultiDeltaDenoiser::new(x.clone());
    let schedule = edm_schedule(0.002, 80.0, 7.0, steps)?;
    let mut hits = 0usize;
    let mut samples = DMatrix::zeros(trials, d);
    for t in 0..trials {
        let x_t = rng::normal_vector(&mut rng::seeded(rng::derive_seed(seed, t as u64)), d, 80.0);
        let out = ode_sample(&m, &schedule, &x_t)?;
        let (i, dist) = nearest_neighbor(&x, out.final_state());
        if dist <= tol * x.row(i).norm() {
            hits += 1;
        }
        samples.set_row(t, &out.final_state().transpose());
    }
    let gl = gl_score(&samples, &x)?.value;
    let need = (0.95 * trials as f64).ceil() as usize;
    Ok(Verdict {
        pass: hits >= need && gl < 0.05,
        summary: format!("{hits}/{trials} samples within relative distance {tol:e} of a training row (need {need}); GL {gl:.3e} (tol 0.05)"),
        details: json!({"dim": d, "samples": n, "steps": steps, "hits": hits, "gl": gl}),
    })
}

/// The Wiener filter's error is uncorrelated with its input; the zero map's
/// is not, wherever the data variance dominates the noise.
fn orthogonality(args: &VerifyArgs, seed: u64, tol: f64) -> Outcome<Verdict> {
    let d = args.dim.unwrap_or(16);
    let n = args.n_samples.unwrap_or(512);
    let draws = args.trials.unwrap_or(10_000);
    let x = two_clusters(seed, n, d, 0.9, 0.1)?;
    let stats = empirical_stats(&x)?;
    let g = GaussianDenoiser::new(stats.clone());
    let lmax = stats.max_eigval();
    let mut pass = true;
    let mut levels = Vec::new();
    for (i, sigma) in [0.5, 1.0, 4.0].into_iter().enumerate() {
        let level_seed = rng::derive_seed(seed, i as u64);
        let rg = orthogonality_residual(&g, &x, sigma, draws, level_seed)?;
        let rz = orthogonality_residual(&AffineDenoiser::zeros(d, sigma), &x, sigma, draws, level_seed)?;
        let zero_checked = lmax >= 10.0 * sigma * sigma;
        pass &= rg < tol && (!zero_checked || rz > 0.3);
        levels.push(json!({"sigma": sigma, "gaussian": rg, "zero_map": rz, "zero_map_checked": zero_checked}));
    }
    let worst = levels
        .iter()
        .filter_map(|l| l["gaussian"].as_f64())
        .fold(0.0, f64::max);
    Ok(Verdict {
        pass,
        summary: format!("max Gaussian residual {worst:.3e} (tol {tol:e}); zero map above 0.3 where lambda_max >= 10 sigma^2"),
        details: json!({"dim": d, "samples": n, "draws": draws, "lambda_max": lmax, "levels": levels}),
    })
}
