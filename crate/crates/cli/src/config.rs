//! Run configuration: command-line flags layered over an optional JSON file.
//!
//! The file holds decimal strings so inputs never pass through binary floats:
//!
//! ```json
//! { "precision_bits": "256", "nmax": "100000", "c0_list": ["1/2", "1"],
//!   "kappa_list": ["2", "e"], "grid_size": "4096", "format": "csv",
//!   "output_path": "out.csv", "params": { "lambda": "2", "C": "5" } }
//! ```
//!
//! Numbers may also be given as JSON numbers. `params` carries the
//! command-specific options under their flag names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rug::{Float, Rational};
use serde::Deserialize;
use serde_json::Value;
use ultrana_core::numerics::{check_precision, euler, parse_decimal, DEFAULT_PRECISION};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub precision_bits: Option<Value>,
    pub nmax: Option<Value>,
    pub c0_list: Option<Vec<Value>>,
    pub kappa_list: Option<Vec<Value>>,
    pub grid_size: Option<Value>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Text of a JSON scalar, so `"2"` and `2` read the same.
fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(CliError::Usage(format!("expected a number or decimal string, got {other}"))),
    }
}

/// Parses a decimal, a fraction `p/q`, or the constant `e`.
pub fn parse_real(text: &str, prec: u32) -> Result<Float, CliError> {
    let t = text.trim();
    if t == "e" {
        return Ok(euler(prec));
    }
    if t.contains('/') {
        let q = Rational::from_str(t).map_err(|e| CliError::Usage(format!("bad fraction {t:?}: {e}")))?;
        return Ok(Float::with_val(prec, q));
    }
    parse_decimal(t, prec).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_integer<T: FromStr>(text: &str, what: &str) -> Result<T, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what} must be a non-negative integer, got {text:?}")))
}

/// Environment variable overriding the default precision.
pub const PRECISION_ENV: &str = "ULTRANA_PRECISION";

/// Settings after merging flags (first), the config file, the environment, then defaults.
#[derive(Debug)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub nmax: Option<u64>,
    pub c0_list: Vec<String>,
    pub kappa_list: Vec<String>,
    pub grid_size: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    params: BTreeMap<String, String>,
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, clap::Args)]
pub struct CommonFlags {
    /// Working precision in bits (at least 64); ULTRANA_PRECISION sets the default
    #[arg(long, global = true)]
    pub precision: Option<String>,
    /// Largest order or grid point
    #[arg(long, global = true)]
    pub nmax: Option<String>,
    /// Values of C0, comma-separated (decimals, fractions p/q, or e)
    #[arg(long, global = true, value_delimiter = ',')]
    pub c0: Vec<String>,
    /// Values of kappa, comma-separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub kappa: Vec<String>,
    /// Sample grid size
    #[arg(long, global = true)]
    pub grid_size: Option<String>,
    /// Data file to write; a metadata file `<output>.meta.json` goes beside it
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON config file; flags take precedence over its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl RunConfig {
    pub fn merge(flags: &CommonFlags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let precision_text = match (&flags.precision, &file.precision_bits) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(v)) => Some(scalar(v)?),
            (None, None) => std::env::var(PRECISION_ENV).ok(),
        };
        let precision_bits = match precision_text {
            Some(t) => parse_integer::<u32>(&t, "precision")?,
            None => DEFAULT_PRECISION,
        };
        check_precision(precision_bits).map_err(|e| CliError::Usage(e.to_string()))?;

        let nmax = match (&flags.nmax, &file.nmax) {
            (Some(t), _) => Some(parse_integer(t, "nmax")?),
            (None, Some(v)) => Some(parse_integer(&scalar(v)?, "nmax")?),
            _ => None,
        };
        let grid_size = match (&flags.grid_size, &file.grid_size) {
            (Some(t), _) => Some(parse_integer(t, "grid size")?),
            (None, Some(v)) => Some(parse_integer(&scalar(v)?, "grid size")?),
            _ => None,
        };
        let list = |flag: &Vec<String>, file: &Option<Vec<Value>>| -> Result<Vec<String>, CliError> {
            if !flag.is_empty() {
                return Ok(flag.clone());
            }
            file.as_ref().map(|v| v.iter().map(scalar).collect()).unwrap_or(Ok(Vec::new()))
        };
        let params = file
            .params
            .iter()
            .map(|(k, v)| Ok((k.clone(), scalar(v)?)))
            .collect::<Result<_, CliError>>()?;
        Ok(RunConfig {
            precision_bits,
            nmax,
            c0_list: list(&flags.c0, &file.c0_list)?,
            kappa_list: list(&flags.kappa, &file.kappa_list)?,
            grid_size,
            output_path: flags.output.clone().or(file.output_path),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            params,
        })
    }

    pub fn nmax_or(&self, default: u64) -> u64 {
        self.nmax.unwrap_or(default)
    }

    pub fn grid_or(&self, default: usize) -> usize {
        self.grid_size.unwrap_or(default)
    }

    pub fn real(&self, text: &str) -> Result<Float, CliError> {
        parse_real(text, self.precision_bits)
    }

    /// The C0 values, or `default` when none were given.
    pub fn c0_values(&self, default: &str) -> Vec<String> {
        if self.c0_list.is_empty() {
            vec![default.to_string()]
        } else {
            self.c0_list.clone()
        }
    }

    pub fn kappa_values(&self, default: &str) -> Vec<String> {
        if self.kappa_list.is_empty() {
            vec![default.to_string()]
        } else {
            self.kappa_list.clone()
        }
    }

    /// A command option: the flag if given, else the config file's `params` entry.
    pub fn param(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.params.get(key).cloned())
    }
}
