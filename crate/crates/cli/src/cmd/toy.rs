use denoiselab::toy::{train_bank, Mode, ToyTrainConfig};
use serde_json::json;

use super::{check_sigmas, num, require_data, Run};
use crate::args::TrainToyArgs;
use crate::denoisers::{BankIndex, BankMember, BANK_FILE, BANK_FORMAT};
use crate::failure::{Failure, Outcome};

/// One model per level, `toy_{i:03}.toy`, indexed by `bank.json` so the
/// directory loads as `toy:DIR`.
pub fn run(args: &TrainToyArgs) -> Outcome {
    check_sigmas(&args.sigmas)?;
    let mode: Mode = args
        .mode
        .parse()
        .map_err(|_| Failure::usage(format!("unknown mode `{}` (expected dae or skip)", args.mode)))?;
    let mut run = Run::start("train-toy", &args.common, args)?;
    let data = require_data(&args.data, &mut run)?;
    let cfg = ToyTrainConfig {
        steps: args.steps,
        batch: args.batch,
        lr: args.lr,
        seed: args.common.seed,
        val_size: args.val_size,
    };
    let (bank, fits) = train_bank(&data, &args.sigmas, args.hidden, mode, &cfg)?;

    let mut members = Vec::new();
    let mut summary = Vec::new();
    for (i, (&sigma, fit)) in args.sigmas.iter().zip(&fits).enumerate() {
        let file = format!("toy_{i:03}.toy");
        run.write(&file, fit.model.to_bytes())?;
        let losses = format!("loss_{i:03}.csv");
        let mut csv = String::from("step,loss,val_loss\n");
        for (step, v) in fit.val_losses.iter().enumerate() {
            let l = fit.losses.get(step).map(|l| num(*l)).unwrap_or_default();
            csv.push_str(&format!("{step},{l},{}\n", num(*v)));
        }
        run.write(&losses, csv)?;
        summary.push(json!({
            "sigma": sigma,
            "file": file,
            "losses": losses,
            "initial_val_loss": fit.val_losses.first(),
            "final_val_loss": fit.val_losses.last(),
            "diverged": fit.diverged,
        }));
        members.push(BankMember { sigma, file });
        if fit.diverged {
            log::warn!("model at sigma {sigma} ended with a higher validation loss than it started with");
        }
    }
    log::info!("trained {} models", bank.members().len());
    run.write_json(
        BANK_FILE,
        &BankIndex {
            format: BANK_FORMAT.into(),
            members,
        },
    )?;
    run.write_json(
        "train.json",
        &json!({ "params_per_model": fits[0].model.n_params(), "models": summary }),
    )?;
    run.finish()
}
