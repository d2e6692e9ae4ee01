use std::fs;
use std::path::Path;

use denoiselab::dataset::read_container_bytes;
use denoiselab::metrics::{
    gl_score, metric_sweep, DiffVariant, LinearityVariant, MetricSeries, SweepMetric, GL_GENERALIZATION_THRESHOLD,
};
use nalgebra::DMatrix;
use serde_json::json;

use super::{load_data, require_data, schedule, Run};
use crate::args::{MetricKind, MetricsArgs, Variant};
use crate::denoisers::DenoiserSpec;
use crate::failure::{Failure, Outcome};
use crate::svg;

pub fn run(args: &MetricsArgs) -> Outcome {
    let mut run = Run::start("metrics", &args.common, args)?;
    match args.metric {
        MetricKind::Gl => gl(args, &mut run)?,
        _ => sweep(args, &mut run)?,
    }
    run.finish()
}

fn sweep(args: &MetricsArgs, run: &mut Run) -> Outcome {
    let sched = schedule(&args.schedule)?;
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let data = require_data(&args.data, run)?;
    let spec: DenoiserSpec = args.denoiser.parse()?;
    for p in spec.inputs() {
        run.input(&p)?;
    }
    let first = spec.build(Some(&data), args.dim)?;
    let second;
    let metric = match args.metric {
        MetricKind::Linearity => SweepMetric::Linearity {
            denoiser: first.as_ref(),
            data: &data,
            alpha: args.alpha,
            beta: args.beta,
            variant: match args.variant {
                None | Some(Variant::Cosine) => LinearityVariant::Cosine,
                Some(Variant::Nmse) => LinearityVariant::Nmse,
                Some(Variant::Rmse) => return Err(Failure::usage("linearity variants are cosine and nmse")),
            },
        },
        MetricKind::ScoreDiff => {
            let spec: DenoiserSpec = args.reference.parse()?;
            for p in spec.inputs() {
                run.input(&p)?;
            }
            second = spec.build(Some(&data), args.dim)?;
            SweepMetric::ScoreDiff {
                first: first.as_ref(),
                second: second.as_ref(),
                data: &data,
                variant: match args.variant {
                    None | Some(Variant::Rmse) => DiffVariant::Rmse,
                    Some(Variant::Nmse) => DiffVariant::Nmse,
                    Some(Variant::Cosine) => return Err(Failure::usage("score-diff variants are rmse and nmse")),
                },
            }
        }
        MetricKind::Gl => unreachable!(),
    };
    let series = metric_sweep(&metric, &sched, args.n, args.common.seed)?;
    let mut csv = Vec::new();
    series.write_csv(&mut csv).map_err(|e| Failure::Io(e.to_string()))?;
    run.write(&format!("{}.csv", series.name), csv)?;
    run.write_json(&format!("{}.json", series.name), &series)?;
    if args.svg {
        run.write(&format!("{}.svg", series.name), svg::render(std::slice::from_ref(&series), &series.name)?)?;
    }
    Ok(())
}

fn gl(args: &MetricsArgs, run: &mut Run) -> Outcome {
    let path = args
        .samples
        .as_deref()
        .ok_or_else(|| Failure::usage("--metric gl needs --samples"))?;
    let samples = load_samples(path)?;
    run.input(path)?;
    let data = load_data(&args.data, Some(run))?.ok_or_else(|| Failure::usage("--metric gl needs --data"))?;
    let est = gl_score(&samples, &data)?;
    run.write_json(
        "gl.json",
        &json!({
            "value": est.value,
            "skipped": est.skipped,
            "samples": samples.nrows(),
            "threshold": GL_GENERALIZATION_THRESHOLD,
            "generalizes": est.value > GL_GENERALIZATION_THRESHOLD,
        }),
    )?;
    Ok(())
}

/// Generated samples: headerless CSV or a raw-f64 container. Unlike training
/// data they may leave [-1, 1].
pub fn load_samples(path: &Path) -> Outcome<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_sample_csv(&bytes).map_err(|e| Failure::io(path, e))
    } else {
        read_container_bytes(&bytes).map_err(|e| Failure::at(path, e))
    }
}

pub fn parse_sample_csv(bytes: &[u8]) -> Result<DMatrix<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("row {i} holds a non-numeric or non-finite value"))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format!("row {i} has {} values, expected {}", row.len(), first.len()));
            }
        }
        rows.push(row);
    }
    let d = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || d == 0 {
        return Err("no samples".into());
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Series stored next to a metrics run, for plotting.
pub fn read_series(path: &Path) -> Outcome<MetricSeries> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    MetricSeries::parse_csv(&name, &bytes).map_err(|e| Failure::at(path, e))
}
