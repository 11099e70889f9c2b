//! `key=value` file parsing for the global config file and the synth
//! spec file, plus the flag > file > environment > built-in resolution
//! helpers.

use std::collections::HashMap;
use std::env;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::{CliError, KChoice};

/// Keys accepted in the global `--config` file.
const CONFIG_KEYS: [&str; 8] = [
    "scale",
    "cutoff",
    "upper_cutoff",
    "k",
    "kmax",
    "seed",
    "min_pixels",
    "threads",
];

/// Parses a file of `key=value` lines. Blank lines and `#` comments are
/// skipped; unknown and repeated keys are rejected.
pub fn parse_kv_file(
    path: &Path,
    allowed: &[&str],
) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut values = HashMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::args(format!(
                "{} line {}: expected `key=value`, got `{line}`",
                path.display(),
                number + 1
            ))
        })?;
        let key = key.trim().to_string();
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::args(format!(
                "{} line {}: unknown key `{key}`",
                path.display(),
                number + 1
            )));
        }
        if values.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::args(format!(
                "{} line {}: key `{key}` given twice",
                path.display(),
                number + 1
            )));
        }
    }
    Ok(values)
}

/// The parsed `--config` file (or an empty stand-in).
pub struct ConfigFile {
    values: HashMap<String, String>,
    origin: String,
}

impl ConfigFile {
    pub fn empty() -> Self {
        Self {
            values: HashMap::new(),
            origin: String::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            values: parse_kv_file(path, &CONFIG_KEYS)?,
            origin: path.display().to_string(),
        })
    }

    fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::args(format!("{}: bad value `{raw}` for `{key}`: {e}", self.origin))
            }),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
    }

    pub fn get_k(&self, key: &str) -> Result<Option<KChoice>, CliError> {
        self.get(key)
    }
}

/// Resolves the µm-per-pixel scale: flag, then config file; there is no
/// built-in default, so a missing scale is an argument error.
pub fn resolve_scale(flag: Option<f64>, config: &ConfigFile) -> Result<f64, CliError> {
    let scale = match flag {
        Some(s) => s,
        None => config
            .get_f64("scale")?
            .ok_or_else(|| CliError::args("--scale is required (µm per pixel)"))?,
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CliError::args(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(scale)
}

/// Resolves the seed: flag, then config file, then `POREMINE_SEED`,
/// then 0.
pub fn resolve_seed(flag: Option<u64>, config: &ConfigFile) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = config.get_u64("seed")? {
        return Ok(seed);
    }
    seed_from_env()
}

/// Reads `POREMINE_SEED`, defaulting to 0 when unset.
pub fn seed_from_env() -> Result<u64, CliError> {
    match env::var("POREMINE_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            CliError::args(format!("POREMINE_SEED must be an unsigned integer, got `{raw}`"))
        }),
        Err(_) => Ok(0),
    }
}
