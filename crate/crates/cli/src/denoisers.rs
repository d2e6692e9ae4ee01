//! Denoiser selection strings: `multi-delta`, `gaussian`, `affine:PATH`,
//! `toy:PATH` (checkpoint file or bank directory) and `external:"CMD ARGS"`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use denoiselab::dataset::{empirical_stats, DataMatrix};
use denoiselab::denoise::plugin::DEFAULT_TIMEOUT;
use denoiselab::denoise::{AffineDenoiser, Denoiser, GaussianDenoiser, MultiDeltaDenoiser, PluginDenoiser};
use denoiselab::toy::{ToyBank, ToyDenoiser};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Outcome};

/// Index file of a toy bank directory.
pub const BANK_FILE: &str = "bank.json";
pub const BANK_FORMAT: &str = "toy-bank/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankIndex {
    pub format: String,
    pub members: Vec<BankMember>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankMember {
    pub sigma: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserSpec {
    MultiDelta,
    Gaussian,
    Affine(PathBuf),
    Toy(PathBuf),
    External(String),
}

impl FromStr for DenoiserSpec {
    type Err = Failure;

    fn from_str(s: &str) -> Outcome<Self> {
        let s = s.trim();
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let arg = |what: &str| {
            rest.map(unquote)
                .filter(|r| !r.is_empty())
                .ok_or_else(|| Failure::usage(format!("denoiser `{s}` needs {what} after `{kind}:`")))
        };
        match (kind, rest) {
            ("multi-delta", None) => Ok(Self::MultiDelta),
            ("gaussian", None) => Ok(Self::Gaussian),
            ("affine", _) => Ok(Self::Affine(PathBuf::from(arg("a checkpoint path")?))),
            ("toy", _) => Ok(Self::Toy(PathBuf::from(arg("a checkpoint path")?))),
            ("external", _) => Ok(Self::External(arg("a command line")?.to_string())),
            _ => Err(Failure::usage(format!(
                "unknown denoiser `{s}` (expected multi-delta, gaussian, affine:PATH, toy:PATH or external:\"CMD\")"
            ))),
        }
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if let Some(inner) = s.strip_prefix(q).and_then(|r| r.strip_suffix(q)) {
            return inner;
        }
    }
    s
}

impl DenoiserSpec {
    /// Files the denoiser is read from, for the manifest.
    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Self::Affine(p) => vec![p.clone()],
            Self::Toy(p) if p.is_dir() => vec![p.join(BANK_FILE)],
            Self::Toy(p) => vec![p.clone()],
            _ => Vec::new(),
        }
    }

    pub fn build(&self, data: Option<&DataMatrix>, dim: Option<usize>) -> Outcome<Box<dyn Denoiser>> {
        let need_data = || data.ok_or_else(|| Failure::usage(format!("denoiser {self:?} needs --data")));
        let d: Box<dyn Denoiser> = match self {
            Self::MultiDelta => Box::new(MultiDeltaDenoiser::new(need_data()?.clone())),
            Self::Gaussian => Box::new(GaussianDenoiser::new(empirical_stats(need_data()?)?)),
            Self::Affine(p) => Box::new(AffineDenoiser::load(p).map_err(|e| Failure::at(p, e))?),
            Self::Toy(p) if p.is_dir() => Box::new(load_bank(p)?),
            Self::Toy(p) => Box::new(ToyDenoiser::load(p).map_err(|e| Failure::at(p, e))?),
            Self::External(cmd) => {
                let dim = data
                    .map(DataMatrix::dim)
                    .or(dim)
                    .ok_or_else(|| Failure::usage("external denoisers need --data or --dim"))?;
                Box::new(PluginDenoiser::spawn(cmd, dim, DEFAULT_TIMEOUT).map_err(|e| Failure::Plugin(e.to_string()))?)
            }
        };
        if let Some(x) = data {
            if d.dim() != x.dim() {
                return Err(Failure::usage(format!(
                    "denoiser has dimension {} but the data has {}",
                    d.dim(),
                    x.dim()
                )));
            }
        }
        Ok(d)
    }
}

pub fn load_bank(dir: &Path) -> Outcome<ToyBank> {
    let index_path = dir.join(BANK_FILE);
    let text = fs::read(&index_path).map_err(|e| Failure::io(&index_path, e))?;
    let index: BankIndex = serde_json::from_slice(&text).map_err(|e| Failure::io(&index_path, e))?;
    if index.format != BANK_FORMAT {
        return Err(Failure::io(&index_path, format!("unsupported bank format `{}`", index.format)));
    }
    let mut members = Vec::with_capacity(index.members.len());
    for m in &index.members {
        let path = dir.join(&m.file);
        members.push((m.sigma, ToyDenoiser::load(&path).map_err(|e| Failure::at(&path, e))?));
    }
    ToyBank::new(members).map_err(|e| Failure::at(&index_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!("gaussian".parse::<DenoiserSpec>().unwrap(), DenoiserSpec::Gaussian);
        assert_eq!("multi-delta".parse::<DenoiserSpec>().unwrap(), DenoiserSpec::MultiDelta);
        assert_eq!(
            "affine:a/b.aff".parse::<DenoiserSpec>().unwrap(),
            DenoiserSpec::Affine("a/b.aff".into())
        );
        assert_eq!("toy:m".parse::<DenoiserSpec>().unwrap(), DenoiserSpec::Toy("m".into()));
        assert_eq!(
            "external:\"plug --x 1\"".parse::<DenoiserSpec>().unwrap(),
            DenoiserSpec::External("plug --x 1".into())
        );
        assert_eq!(
            "external:plug 'a b'".parse::<DenoiserSpec>().unwrap(),
            DenoiserSpec::External("plug 'a b'".into())
        );
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["", "wiener", "affine:", "external:\"\"", "gaussian:x"] {
            let err = bad.parse::<DenoiserSpec>().unwrap_err();
            assert_eq!(err.code(), 2, "{bad}");
        }
    }

    #[test]
    fn data_denoisers_need_data() {
        assert_eq!(DenoiserSpec::Gaussian.build(None, None).err().unwrap().code(), 2);
        assert_eq!(
            DenoiserSpec::External("true".into()).build(None, None).err().unwrap().code(),
            2
        );
    }
}
