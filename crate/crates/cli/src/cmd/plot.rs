use super::metrics::read_series;
use super::Run;
use crate::args::PlotArgs;
use crate::failure::{Failure, Outcome};
use crate::svg;

pub fn run(args: &PlotArgs) -> Outcome {
    if !args.name.ends_with(".svg") || args.name.contains(['/', '\\']) {
        return Err(Failure::usage(format!("--name `{}` must be a plain file name ending in .svg", args.name)));
    }
    let mut run = Run::start("plot", &args.common, args)?;
    let mut series = Vec::with_capacity(args.series.len());
    for path in &args.series {
        series.push(read_series(path)?);
        run.input(path)?;
    }
    run.write(&args.name, svg::render(&series, &args.title)?)?;
    run.finish()
}
