use denoiselab::dataset::{empirical_stats, write_container_bytes};
use serde_json::json;

use super::{num, require_data, Run};
use crate::args::StatsArgs;
use crate::failure::Outcome;

/// Writes `mean.csv`, `eigvals.csv` (descending), `basis.f64` (d × r
/// container, eigenvectors as columns) and `stats.json`.
pub fn run(args: &StatsArgs) -> Outcome {
    let mut run = Run::start("stats", &args.common, args)?;
    let data = require_data(&args.data, &mut run)?;
    let stats = empirical_stats(&data)?;

    let mut mean = String::from("index,mean\n");
    for (i, v) in stats.mean.iter().enumerate() {
        mean.push_str(&format!("{i},{}\n", num(*v)));
    }
    run.write("mean.csv", mean)?;

    let mut eig = String::from("index,eigval\n");
    for (i, v) in stats.eigvals.iter().enumerate() {
        eig.push_str(&format!("{i},{}\n", num(*v)));
    }
    run.write("eigvals.csv", eig)?;
    run.write("basis.f64", write_container_bytes(&stats.basis))?;
    run.write_json(
        "stats.json",
        &json!({
            "samples": data.n_samples(),
            "dim": stats.dim(),
            "rank": stats.eigvals.iter().filter(|l| **l > 0.0).count(),
            "max_eigval": stats.max_eigval(),
            "trace": stats.eigvals.sum(),
        }),
    )?;
    run.finish()
}
