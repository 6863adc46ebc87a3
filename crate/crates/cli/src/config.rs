//! Run configuration: merged view of command-line flags, the optional flat
//! key=value config file, and the QKRAW_PRECISION environment override.

use std::collections::HashMap;
use std::path::PathBuf;

use qkraw_core::DEFAULT_PRECISION;

use crate::AppError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendChoice {
    Exact,
    Float,
}

impl BackendChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendChoice::Exact => "exact",
            BackendChoice::Float => "float",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Fully resolved configuration for one command invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    pub q: Option<String>,
    pub theta2: Option<String>,
    pub p: Option<String>,
    pub big_n: Option<u32>,
    pub n: Option<u32>,
    pub x: Option<u32>,
    pub backend: BackendChoice,
    /// true when the backend came from a flag or config file rather than
    /// the per-suite default
    pub backend_explicit: bool,
    pub precision: u32,
    pub output: OutputFormat,
    pub out_path: Option<PathBuf>,
    pub suite: Vec<String>,
    pub quantity: Option<String>,
    pub tau: Option<String>,
    pub inject_fault: bool,
}

/// Parses the flat `key = value` config format; `#` starts a comment.
pub fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(AppError::Usage(format!(
                "config line {} is not key=value: {line:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub struct ConfigBuilder {
    file: HashMap<String, String>,
}

impl ConfigBuilder {
    pub fn new(config_path: Option<&PathBuf>) -> Result<Self, AppError> {
        let file = match config_path {
            Some(p) => parse_config_file(p)?,
            None => HashMap::new(),
        };
        Ok(ConfigBuilder { file })
    }

    pub fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.file.get(key).cloned())
    }

    pub fn u32_opt(&self, flag: Option<u32>, key: &str) -> Result<Option<u32>, AppError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => match self.file.get(key) {
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| AppError::Usage(format!("config {key}={s:?} is not an integer"))),
                None => Ok(None),
            },
        }
    }

    pub fn backend(
        &self,
        flag: Option<BackendChoice>,
    ) -> Result<(BackendChoice, bool), AppError> {
        if let Some(b) = flag {
            return Ok((b, true));
        }
        match self.file.get("backend").map(String::as_str) {
            Some("exact") => Ok((BackendChoice::Exact, true)),
            Some("float") => Ok((BackendChoice::Float, true)),
            Some(other) => Err(AppError::Usage(format!("unknown backend {other:?}"))),
            None => Ok((BackendChoice::Float, false)),
        }
    }

    pub fn output(&self, flag: Option<OutputFormat>) -> Result<OutputFormat, AppError> {
        if let Some(o) = flag {
            return Ok(o);
        }
        match self.file.get("output").map(String::as_str) {
            Some("json") => Ok(OutputFormat::Json),
            Some("csv") => Ok(OutputFormat::Csv),
            Some(other) => Err(AppError::Usage(format!("unknown output format {other:?}"))),
            None => Ok(OutputFormat::Json),
        }
    }

    /// Precision: flag, then config file, then QKRAW_PRECISION, then default.
    pub fn precision(&self, flag: Option<u32>) -> Result<u32, AppError> {
        if let Some(p) = self.u32_opt(flag, "precision")? {
            return Self::validate_precision(p);
        }
        if let Ok(env) = std::env::var("QKRAW_PRECISION") {
            let p = env.parse().map_err(|_| {
                AppError::Usage(format!("QKRAW_PRECISION={env:?} is not an integer"))
            })?;
            return Self::validate_precision(p);
        }
        Ok(DEFAULT_PRECISION)
    }

    fn validate_precision(p: u32) -> Result<u32, AppError> {
        if !(21..=10_000).contains(&p) {
            return Err(AppError::Usage(format!(
                "precision {p} outside supported range 21..=10000"
            )));
        }
        Ok(p)
    }

    pub fn suite(&self, flag: Vec<String>) -> Vec<String> {
        if !flag.is_empty() {
            return flag;
        }
        match self.file.get("suite") {
            Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
            None => Vec::new(),
        }
    }
}
