//! Flat `key = value` config files and flag/config resolution.
//!
//! Keys use the long flag names without the leading dashes
//! (`omega-a = 2`, `interaction = a' b c + hc`). Command-line flags
//! override config values; a value required by a subcommand but found in
//! neither place is a validation error naming the flag.

use std::collections::HashMap;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("--config: cannot read {}: {e}", path.display()))
        })?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "--config: line {} is not `key = value`: `{line}`",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn parse_as<T: std::str::FromStr>(raw: &str, flag: &str) -> Result<T, CliError> {
    raw.parse().map_err(|_| {
        CliError::validation(format!("--{flag}: cannot parse value `{raw}`"))
    })
}

/// Flag value, else config value, else `None`.
pub fn resolve<T: std::str::FromStr>(
    flag_value: Option<T>,
    config: &Config,
    flag: &str,
) -> Result<Option<T>, CliError> {
    if let Some(v) = flag_value {
        return Ok(Some(v));
    }
    match config.get(flag) {
        Some(raw) => Ok(Some(parse_as(raw, flag)?)),
        None => Ok(None),
    }
}

/// Flag value, else config value, else a validation error naming the flag.
pub fn require<T: std::str::FromStr>(
    flag_value: Option<T>,
    config: &Config,
    flag: &str,
) -> Result<T, CliError> {
    resolve(flag_value, config, flag)?
        .ok_or_else(|| CliError::validation(format!("--{flag} is required")))
}

/// Like [`resolve`] with a default.
pub fn resolve_or<T: std::str::FromStr>(
    flag_value: Option<T>,
    config: &Config,
    flag: &str,
    default: T,
) -> Result<T, CliError> {
    Ok(resolve(flag_value, config, flag)?.unwrap_or(default))
}
