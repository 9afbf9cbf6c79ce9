//! Flat `key = value` settings files and flag/file/default precedence.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use fibersample::{FiberError, Result};

/// Parses a settings file: one `key = value` per line, `#` comments, blank
/// lines ignored.  Keys mirror long flag names.
pub fn load(path: Option<&Path>) -> Result<HashMap<String, String>> {
    let mut values = HashMap::new();
    let Some(path) = path else {
        return Ok(values);
    };
    let text = fs::read_to_string(path)?;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(FiberError::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got {line:?}"),
            });
        };
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(values)
}

/// Resolves each setting as flag value, then config-file value, then the
/// built-in default.
pub struct Resolver {
    values: HashMap<String, String>,
}

impl Resolver {
    pub fn new(values: HashMap<String, String>) -> Self {
        Self { values }
    }

    fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                FiberError::InvalidArgument(format!("config value {key} = {raw:?} does not parse"))
            }),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.lookup(key)?.unwrap_or(default)),
        }
    }

    pub fn opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup(key),
        }
    }

    /// Boolean switches: the flag can only turn a setting on, the config
    /// file supplies it otherwise.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.values.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(FiberError::InvalidArgument(format!(
                "config value {key} = {other:?} is not true or false"
            ))),
        }
    }
}
