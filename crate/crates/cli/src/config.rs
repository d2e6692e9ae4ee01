//! JSON config files, and the manifest every run leaves behind.
//!
//! A config is a flat JSON object keyed by flag name (`sigma_min` or
//! `sigma-min`). A manifest is accepted as a config too: its `flags` object is
//! used after checking that `subcommand` matches.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "denoiselab-manifest/1";

/// Flags stored in `path`, for `subcommand`.
pub fn load_flags(path: &Path, subcommand: &str) -> Outcome<Map<String, Value>> {
    let text = fs::read(path).map_err(|e| Failure::io(path, e))?;
    flags_from_json(&text, subcommand, path)
}

/// Flags held by a config or manifest document; `path` only labels errors.
pub fn flags_from_json(text: &[u8], subcommand: &str, path: &Path) -> Outcome<Map<String, Value>> {
    let value: Value = serde_json::from_slice(text).map_err(|e| Failure::io(path, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(Failure::io(path, "config must be a JSON object"));
    };
    if obj.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        let recorded = obj.get("subcommand").and_then(Value::as_str).unwrap_or_default();
        if recorded != subcommand {
            return Err(Failure::usage(format!(
                "{} records a `{recorded}` run, not `{subcommand}`",
                path.display()
            )));
        }
        return match obj.remove("flags") {
            Some(Value::Object(flags)) => Ok(flags),
            _ => Err(Failure::io(path, "manifest has no `flags` object")),
        };
    }
    Ok(obj)
}

/// Extra command-line tokens supplying every config value whose flag was not
/// given explicitly.
pub fn config_tokens(flags: &Map<String, Value>, cmd: &clap::Command, matches: &ArgMatches) -> Outcome<Vec<OsString>> {
    let mut tokens = Vec::new();
    for (key, value) in flags {
        let id = key.replace('-', "_");
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_id() == id.as_str() && a.get_long().is_some() && a.get_id() != "config")
            .ok_or_else(|| Failure::usage(format!("unknown config key `{key}` for `{}`", cmd.get_name())))?;
        if matches.value_source(&id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let long = arg.get_long().unwrap_or_default();
        let bad = || Failure::usage(format!("config key `{key}` has an unusable value {value}"));
        match (arg.get_action(), value) {
            (_, Value::Null) => {}
            (ArgAction::SetTrue, Value::Bool(true)) => tokens.push(format!("--{long}").into()),
            (ArgAction::SetTrue, Value::Bool(false)) => {}
            (ArgAction::SetTrue, _) => return Err(bad()),
            (_, Value::Array(items)) => {
                let parts: Vec<String> = items.iter().map(|v| scalar(v).ok_or_else(bad)).collect::<Outcome<_>>()?;
                tokens.push(format!("--{long}={}", parts.join(",")).into());
            }
            (_, v) => tokens.push(format!("--{long}={}", scalar(v).ok_or_else(bad)?).into()),
        }
    }
    Ok(tokens)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl InputRecord {
    /// Size and digest of a file, or of every file in a directory taken in
    /// name order.
    pub fn of(path: &Path) -> Outcome<Self> {
        let mut hasher = Sha256::new();
        let mut bytes = 0u64;
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in fs::read_dir(path).map_err(|e| Failure::io(path, e))? {
                let entry = entry.map_err(|e| Failure::io(path, e))?;
                if entry.path().is_file() {
                    files.push(entry.path());
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        for f in &files {
            let content = fs::read(f).map_err(|e| Failure::io(f, e))?;
            if path.is_dir() {
                hasher.update(f.file_name().unwrap_or_default().as_encoded_bytes());
                hasher.update([0u8]);
            }
            hasher.update(&content);
            bytes += content.len() as u64;
        }
        let sha256 = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            path: path.to_path_buf(),
            bytes,
            sha256,
        })
    }
}

/// Everything needed to repeat a run. Holds no timestamps or absolute output
/// locations, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub flags: Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    pub formats: BTreeMap<String, String>,
}

/// Names and versions of the file formats the tool reads and writes.
pub fn format_versions() -> BTreeMap<String, String> {
    let magic = |m: &[u8; 4]| String::from_utf8_lossy(m).into_owned();
    BTreeMap::from([
        ("affine-checkpoint".into(), magic(denoiselab::denoise::AFFINE_MAGIC)),
        ("data-container".into(), magic(denoiselab::dataset::CONTAINER_MAGIC)),
        ("jacobian-report".into(), "jacobian-report/1".into()),
        ("manifest".into(), MANIFEST_FORMAT.into()),
        ("plugin-protocol".into(), magic(denoiselab::denoise::plugin::PLUGIN_MAGIC)),
        ("series-csv".into(), "sigma,value,n,seed".into()),
        ("toy-bank".into(), crate::denoisers::BANK_FORMAT.into()),
        ("toy-checkpoint".into(), magic(denoiselab::toy::MAGIC)),
        ("trajectory-csv".into(), "step,sigma,x0..".into()),
    ])
}
