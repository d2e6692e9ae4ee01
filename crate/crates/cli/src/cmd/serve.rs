use std::io;

use denoiselab::denoise::plugin::{serve, ServeTarget};

use super::load_data;
use crate::args::ServeArgs;
use crate::denoisers::DenoiserSpec;
use crate::failure::{Failure, Outcome};

/// Child side of the plugin protocol on stdin/stdout. Writes no files.
pub fn run(args: &ServeArgs) -> Outcome {
    let data = load_data(&args.data, None)?;
    let denoiser = match args.target.as_str() {
        "echo" => None,
        other => {
            let spec: DenoiserSpec = other.parse()?;
            if let DenoiserSpec::External(_) = spec {
                return Err(Failure::usage("serve-plugin cannot forward to another plugin"));
            }
            Some(spec.build(data.as_ref(), None)?)
        }
    };
    let target = match &denoiser {
        None => ServeTarget::Echo,
        Some(d) => ServeTarget::Denoiser(d.as_ref()),
    };
    serve(io::stdin().lock(), io::stdout().lock(), target).map_err(|e| Failure::Plugin(e.to_string()))
}
