//! Errors, configuration loading and file writing shared by the commands.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use atomlink::config::LinkConfig;
use atomlink::Error;
use serde::Serialize;

use crate::RunOverrides;

/// A command failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, data file or parameter value (exit 2).
    Invalid(Error),
    /// Failure while computing or writing results (exit 3).
    Runtime(Error),
    /// An input file that cannot be opened (exit 2).
    Unreadable { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Unreadable { .. } => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(e) | CliError::Runtime(e) => write!(f, "{e}"),
            CliError::Unreadable { path, source } => write!(f, "cannot open {}: {source}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::ConfigParse { .. }
            | Error::Schema { .. }
            | Error::InfeasibleSchedule(_)
            | Error::Negative { .. }
            | Error::DegenerateData(_) => CliError::Invalid(e),
            _ => CliError::Runtime(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Opens an input file; a missing or unreadable input is an input error.
pub fn open_input(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|source| CliError::Unreadable { path: path.to_path_buf(), source })
}

/// Loads `path`, applies command-line overrides and validates the result.
pub fn load_config(path: &Path, overrides: Option<&RunOverrides>) -> CliResult<LinkConfig> {
    let text = std::io::read_to_string(open_input(path)?)?;
    let mut cfg = LinkConfig::from_toml_str(&text)?;
    if let Some(o) = overrides {
        if let Some(seed) = o.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = o.trials {
            cfg.run.trials = Some(trials);
            cfg.run.duration_s = None;
        }
        if let Some(d) = o.duration_s {
            cfg.run.trials = None;
            cfg.run.duration_s = Some(d);
        }
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Output directory, created on first use.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(path)?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn writer(&self, name: &str) -> CliResult<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult {
        std::fs::write(self.path(name), text)?;
        Ok(())
    }
}

/// Formats an optional number for a CSV cell; missing values are empty.
pub fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(String::new, |x| format!("{x:.6}"))
}
