use denoiselab::jacobian::JacobianReport;
use denoiselab::rng;

use super::{require_data, Run};
use crate::args::JacobianArgs;
use crate::denoisers::DenoiserSpec;
use crate::failure::{Failure, Outcome};

/// Evaluates at `x = data[row] + σ·ε` with ε drawn from `seed`; writes the
/// `jacobian.*` report files.
pub fn run(args: &JacobianArgs) -> Outcome {
    let mut run = Run::start("jacobian", &args.common, args)?;
    let data = require_data(&args.data, &mut run)?;
    if args.row >= data.n_samples() {
        return Err(Failure::usage(format!(
            "--row {} is out of range for {} samples",
            args.row,
            data.n_samples()
        )));
    }
    let spec: DenoiserSpec = args.denoiser.parse()?;
    for p in spec.inputs() {
        run.input(&p)?;
    }
    let d = spec.build(Some(&data), None)?;
    let mut r = rng::seeded(args.common.seed);
    let x = data.row(args.row) + rng::normal_vector(&mut r, data.dim(), args.sigma);
    let report = JacobianReport::compute(d.as_ref(), &x, args.sigma, args.step, args.k)?;
    report.export(run.dir(), "jacobian").map_err(|e| Failure::at(run.dir(), e))?;
    for ext in ["json", "point.f64", "left.f64", "right.f64"] {
        run.produced(&format!("jacobian.{ext}"));
    }
    run.finish()
}
