//! Subcommand implementations and the output-directory plumbing they share.

pub mod distill;
pub mod jacobian;
pub mod metrics;
pub mod plot;
pub mod sample;
pub mod serve;
pub mod stats;
pub mod toy;
pub mod verify;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use denoiselab::dataset::{load_dataset, DataFormat, DataMatrix};
use denoiselab::sampler::{edm_schedule, SigmaSchedule};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args::{Common, DataArgs, Format, ScheduleArgs};
use crate::config::{format_versions, InputRecord, Manifest, MANIFEST_FILE, MANIFEST_FORMAT};
use crate::failure::{Failure, Outcome};

pub const OUT_ENV: &str = "DENOISELAB_OUT";
pub const DEFAULT_OUT: &str = "denoiselab-out";

pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// One invocation's output directory. Files are written through it so the
/// manifest can list them.
pub struct Run {
    dir: PathBuf,
    subcommand: &'static str,
    seed: u64,
    flags: serde_json::Value,
    inputs: Vec<InputRecord>,
    outputs: BTreeSet<String>,
}

impl Run {
    pub fn start(subcommand: &'static str, common: &Common, flags: &impl Serialize) -> Outcome<Self> {
        let dir = resolve_out(common.out.as_deref());
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        let flags = serde_json::to_value(flags).map_err(|e| Failure::usage(format!("flags not serializable: {e}")))?;
        Ok(Self {
            dir,
            subcommand,
            seed: common.seed,
            flags,
            inputs: Vec::new(),
            outputs: BTreeSet::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, path: &Path) -> Outcome<()> {
        let record = InputRecord::of(path)?;
        if !self.inputs.contains(&record) {
            self.inputs.push(record);
        }
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Outcome<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
        self.outputs.insert(name.to_string());
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Outcome<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text)
    }

    /// Record a file some other writer already placed in the directory.
    pub fn produced(&mut self, name: &str) {
        self.outputs.insert(name.to_string());
    }

    pub fn finish(mut self) -> Outcome<()> {
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.into(),
            seed: self.seed,
            flags: std::mem::take(&mut self.flags),
            inputs: std::mem::take(&mut self.inputs),
            outputs: self.outputs.iter().cloned().collect(),
            formats: format_versions(),
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(())
    }
}

/// Shortest decimal that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn load_data(args: &DataArgs, run: Option<&mut Run>) -> Outcome<Option<DataMatrix>> {
    let Some(path) = &args.data else {
        return Ok(None);
    };
    if !path.exists() {
        return Err(Failure::io(path, "no such file or directory"));
    }
    let format = match args.format {
        Some(Format::Csv) => DataFormat::Csv,
        Some(Format::Raw) => DataFormat::RawF64,
        Some(Format::Pgm) => DataFormat::PgmDir,
        None => DataFormat::infer(path),
    };
    let data = load_dataset(path, format).map_err(|e| Failure::at(path, e))?;
    if let Some(run) = run {
        run.input(path)?;
    }
    log::info!("loaded {} samples of dimension {} from {}", data.n_samples(), data.dim(), path.display());
    Ok(Some(data))
}

pub fn require_data(args: &DataArgs, run: &mut Run) -> Outcome<DataMatrix> {
    load_data(args, Some(run))?.ok_or_else(|| Failure::usage("--data is required"))
}

pub fn schedule(args: &ScheduleArgs) -> Outcome<SigmaSchedule> {
    Ok(edm_schedule(args.sigma_min, args.sigma_max, args.rho, args.steps)?)
}

pub fn check_sigmas(sigmas: &[f64]) -> Outcome<()> {
    if sigmas.is_empty() {
        return Err(Failure::usage("at least one noise level is required"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Failure::usage(format!("noise level {s} must be positive and finite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [1.0, 0.0, -0.125, 1e-300, 0.1 + 0.2, 80.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(0.0), "0.0");
    }

    #[test]
    fn explicit_out_wins() {
        assert_eq!(resolve_out(Some(Path::new("x"))), PathBuf::from("x"));
    }

    #[test]
    fn sigma_lists_are_checked() {
        assert!(check_sigmas(&[0.5, 1.0]).is_ok());
        assert_eq!(check_sigmas(&[]).unwrap_err().code(), 2);
        assert_eq!(check_sigmas(&[1.0, -1.0]).unwrap_err().code(), 2);
        assert_eq!(check_sigmas(&[f64::NAN]).unwrap_err().code(), 2);
    }
}
