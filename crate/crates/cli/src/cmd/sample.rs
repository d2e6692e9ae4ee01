use denoiselab::dataset::{empirical_stats, write_container_bytes};
use denoiselab::metrics::{gl_score, nearest_neighbor};
use denoiselab::rng;
use denoiselab::sampler::{gaussian_trajectory, ode_sample};
use nalgebra::DMatrix;
use serde_json::json;

use super::{load_data, matrix_csv, schedule, Run};
use crate::args::SampleArgs;
use crate::denoisers::DenoiserSpec;
use crate::failure::{Failure, Outcome};

/// Sample `i` starts from `N(0, σ_max² I)` drawn with seed
/// `derive_seed(seed, i)`.
pub fn run(args: &SampleArgs) -> Outcome {
    if args.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let sched = schedule(&args.schedule)?;
    let mut run = Run::start("sample", &args.common, args)?;
    let data = load_data(&args.data, Some(&mut run))?;

    let (denoiser, stats) = if args.closed_form {
        let data = data.as_ref().ok_or_else(|| Failure::usage("--closed-form needs --data"))?;
        (None, Some(empirical_stats(data)?))
    } else {
        let spec: DenoiserSpec = args.denoiser.parse()?;
        for p in spec.inputs() {
            run.input(&p)?;
        }
        (Some(spec.build(data.as_ref(), args.dim)?), None)
    };
    let dim = match (&denoiser, &stats) {
        (Some(d), _) => d.dim(),
        (None, Some(s)) => s.dim(),
        (None, None) => unreachable!(),
    };

    let mut finals = DMatrix::zeros(args.count, dim);
    for i in 0..args.count {
        let mut r = rng::seeded(rng::derive_seed(args.common.seed, i as u64));
        let x_t = rng::normal_vector(&mut r, dim, sched.sigma_max);
        let traj = match (&denoiser, &stats) {
            (Some(d), _) => ode_sample(d.as_ref(), &sched, &x_t)?,
            (None, Some(s)) => gaussian_trajectory(s, &x_t, &sched)?,
            (None, None) => unreachable!(),
        };
        finals.set_row(i, &traj.final_state().transpose());
        if args.trajectories {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
            run.write(&format!("trajectories/traj_{i:05}.csv"), buf)?;
        }
    }
    run.write("samples.csv", matrix_csv(&finals))?;
    run.write("samples.f64", write_container_bytes(&finals))?;

    let mut summary = json!({
        "count": args.count,
        "dim": dim,
        "levels": sched.values,
        "closed_form": args.closed_form,
    });
    if let Some(data) = &data {
        let nearest: Vec<_> = finals
            .row_iter()
            .map(|row| {
                let (idx, dist) = nearest_neighbor(data, &row.transpose());
                let norm = data.row(idx).norm();
                json!({"index": idx, "distance": dist, "relative": if norm > 0.0 { dist / norm } else { dist }})
            })
            .collect();
        let gl = gl_score(&finals, data)?;
        summary["nearest"] = json!(nearest);
        summary["gl"] = json!({"value": gl.value, "skipped": gl.skipped});
    }
    run.write_json("summary.json", &summary)?;
    run.finish()
}
