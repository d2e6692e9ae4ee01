use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use denoiselab::Error;

/// Why a run stopped, mapped one-to-one onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A `verify` suite ran to completion and did not pass.
    Verify(String),
    Usage(String),
    /// Unreadable, unwritable or malformed files, and numeric failures.
    Io(String),
    Plugin(String),
}

pub type Outcome<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Plugin(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {err}", path.display()))
    }

    /// Library error raised while handling `path`.
    pub fn at(path: &Path, err: Error) -> Self {
        match Failure::from(err) {
            Failure::Io(msg) if !msg.contains(&*path.to_string_lossy()) => Failure::Io(format!("{}: {msg}", path.display())),
            other => other,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Failure::Verify(m) | Failure::Usage(m) | Failure::Io(m) | Failure::Plugin(m) => m,
        };
        // Diagnostics stay on one line.
        write!(f, "{}", msg.replace('\n', " "))
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        if err.plugin_cause().is_some() {
            return Failure::Plugin(err.to_string());
        }
        match err {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Io(other.to_string()),
        }
    }
}
