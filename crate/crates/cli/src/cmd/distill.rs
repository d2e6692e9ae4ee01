use denoiselab::dataset::empirical_stats;
use denoiselab::distill::{closed_form_linear, distill_linear, DistillConfig};
use denoiselab::metrics::weight_nmse;
use denoiselab::rng;
use serde_json::json;

use super::{check_sigmas, num, require_data, Run};
use crate::args::{DistillArgs, Optimizer};
use crate::denoisers::DenoiserSpec;
use crate::failure::Outcome;

/// Level `i` is fitted with seed `derive_seed(seed, i)` and written as
/// `affine_{i:03}.aff` plus `loss_{i:03}.csv`; `report.json` compares each
/// fit with the closed-form optimum of the data.
pub fn run(args: &DistillArgs) -> Outcome {
    check_sigmas(&args.sigmas)?;
    let mut run = Run::start("distill", &args.common, args)?;
    let data = require_data(&args.data, &mut run)?;
    let spec: DenoiserSpec = args.teacher.parse()?;
    for p in spec.inputs() {
        run.input(&p)?;
    }
    let teacher = spec.build(Some(&data), None)?;
    let stats = empirical_stats(&data)?;

    let mut levels = Vec::new();
    for (i, &sigma) in args.sigmas.iter().enumerate() {
        let cfg = DistillConfig {
            steps: args.steps,
            batch: args.batch,
            lr: args.lr,
            seed: rng::derive_seed(args.common.seed, i as u64),
            adam: args.optimizer == Optimizer::Adam,
            lr_decay: args.lr_decay,
        };
        log::info!("distilling at sigma {sigma}");
        let fit = distill_linear(teacher.as_ref(), &data, sigma, &cfg)?;
        let reference = closed_form_linear(&stats, sigma)?;
        let w_nmse = weight_nmse(&fit.denoiser.weight, &reference.weight)?;
        let b_err = (&fit.denoiser.bias - &reference.bias).norm();
        let b_ref = reference.bias.norm();

        let checkpoint = format!("affine_{i:03}.aff");
        run.write(&checkpoint, fit.denoiser.to_bytes())?;
        let losses = format!("loss_{i:03}.csv");
        let mut csv = String::from("step,loss\n");
        for (step, l) in fit.losses.iter().enumerate() {
            csv.push_str(&format!("{step},{}\n", num(*l)));
        }
        run.write(&losses, csv)?;
        levels.push(json!({
            "sigma": sigma,
            "seed": cfg.seed,
            "checkpoint": checkpoint,
            "losses": losses,
            "initial_loss": fit.losses.first(),
            "final_loss": fit.losses.last(),
            "weight_nmse_vs_closed_form": w_nmse,
            "bias_error_vs_closed_form": if b_ref > 0.0 { b_err / b_ref } else { b_err },
            "bias_error_relative": b_ref > 0.0,
        }));
    }
    run.write_json("report.json", &json!({ "teacher": args.teacher, "levels": levels }))?;
    run.finish()
}
