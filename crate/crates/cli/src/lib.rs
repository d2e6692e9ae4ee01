//! Library behind the `denoiselab` command-line tool.
//!
//! Exit status: 0 success, 1 verification failure, 2 usage error, 3 I/O or
//! data error, 4 plugin protocol error.

pub mod args;
pub mod cmd;
pub mod config;
pub mod denoisers;
pub mod failure;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use failure::{Failure, Outcome};

/// Parse `argv` (program name first), run the subcommand and report any
/// failure as a one-line diagnostic on stderr.
pub fn run(argv: Vec<OsString>) -> ExitCode {
    match parse(argv).and_then(|cli| dispatch(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("denoiselab: {f}");
            f.exit_code()
        }
    }
}

fn clap_failure(e: clap::Error) -> Failure {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        e.exit();
    }
    let rendered = e.render().to_string();
    let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
    Failure::usage(first.trim_start_matches("error: ").to_string())
}

/// Command line merged with `--config` values, or the run a manifest records.
pub fn parse(argv: Vec<OsString>) -> Outcome<Cli> {
    let cli = Cli::try_parse_from(&argv).map_err(clap_failure)?;
    if let Command::Rerun(r) = &cli.command {
        return parse(rerun_argv(&argv[0], &r.manifest, r.out.as_deref())?);
    }
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let root = Cli::command();
    let matches = root.clone().try_get_matches_from(&argv).map_err(clap_failure)?;
    let Some((name, sub_matches)) = matches.subcommand() else {
        return Ok(cli);
    };
    let sub = root
        .find_subcommand(name)
        .ok_or_else(|| Failure::usage(format!("unknown subcommand `{name}`")))?;
    let flags = config::load_flags(&path, name)?;
    let mut merged = argv.clone();
    merged.extend(config::config_tokens(&flags, sub, sub_matches)?);
    Cli::try_parse_from(&merged).map_err(clap_failure)
}

fn rerun_argv(argv0: &OsString, manifest: &Path, out: Option<&Path>) -> Outcome<Vec<OsString>> {
    let text = fs::read(manifest).map_err(|e| Failure::io(manifest, e))?;
    let doc: config::Manifest =
        serde_json::from_slice(&text).map_err(|e| Failure::io(manifest, format!("not a manifest: {e}")))?;
    if doc.format != config::MANIFEST_FORMAT {
        return Err(Failure::io(manifest, format!("unsupported manifest format `{}`", doc.format)));
    }
    if matches!(doc.subcommand.as_str(), "rerun" | "serve-plugin") {
        return Err(Failure::usage(format!("cannot rerun a `{}` manifest", doc.subcommand)));
    }
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => manifest
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    Ok(vec![
        argv0.clone(),
        doc.subcommand.into(),
        "--config".into(),
        manifest.into(),
        "--out".into(),
        out.into(),
    ])
}

pub fn dispatch(command: &Command) -> Outcome {
    log::debug!("running {}", command.name());
    match command {
        Command::Stats(a) => cmd::stats::run(a),
        Command::Sample(a) => cmd::sample::run(a),
        Command::Distill(a) => cmd::distill::run(a),
        Command::Metrics(a) => cmd::metrics::run(a),
        Command::Verify(a) => cmd::verify::run(a),
        Command::TrainToy(a) => cmd::toy::run(a),
        Command::Jacobian(a) => cmd::jacobian::run(a),
        Command::ServePlugin(a) => cmd::serve::run(a),
        Command::Plot(a) => cmd::plot::run(a),
        Command::Rerun(_) => Err(Failure::usage("nested rerun")),
    }
}
