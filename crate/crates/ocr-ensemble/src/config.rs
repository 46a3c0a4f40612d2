//! Flat `key = value` configuration files.
//!
//! One setting per line, UTF-8. Blank lines and lines starting with `#` are
//! ignored; keys and values are trimmed. List-valued keys take
//! comma-separated values. Unknown keys and repeated keys are errors.
//!
//! ```text
//! # experiment.conf
//! window_type = ngrams, disjoint
//! window_size = 10, 20, 30
//! decoding = beam
//! beam_width = 5
//! weighting = uniform
//! seed = 7
//! workers = 8
//! ```
//!
//! Command-line flags take precedence over values from the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Recognised keys.
pub const KEYS: &[&str] = &[
    "window_type",
    "window_size",
    "decoding",
    "beam_width",
    "weighting",
    "seed",
    "workers",
    "lm_weight",
    "lm_order",
    "k",
    "max_len_factor",
    "max_deletions",
    "train_window",
    "stride",
    "dev",
];

/// A rejected configuration file.
#[derive(Debug, Error, PartialEq)]
#[error("{path}:{line}: {message}")]
pub struct ConfigError {
    /// File the problem is in.
    pub path: PathBuf,
    /// 1-based line, 0 when not tied to a line.
    pub line: usize,
    /// Description.
    pub message: String,
}

/// Parsed settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    path: PathBuf,
    values: BTreeMap<String, (usize, String)>,
}

impl Config {
    /// Parses `text`; `path` is only used in diagnostics.
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let path = path.into();
        let err = |line, message: String| ConfigError {
            path: path.clone(),
            line,
            message,
        };
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, "expected key = value".to_string()))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(i + 1, format!("unknown key {key:?}")));
            }
            if values
                .insert(key.to_string(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(err(i + 1, format!("key {key:?} given twice")));
            }
        }
        Ok(Self { path, values })
    }

    /// Reads and parses a file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    /// Single value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((line, value)) = self.values.get(key) else {
            return Ok(None);
        };
        value.parse().map(Some).map_err(|_| ConfigError {
            path: self.path.clone(),
            line: *line,
            message: format!("bad value {value:?} for {key}"),
        })
    }

    /// Comma-separated values of `key`, if present.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((line, value)) = self.values.get(key) else {
            return Ok(None);
        };
        value
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| ConfigError {
                    path: self.path.clone(),
                    line: *line,
                    message: format!("bad value {:?} for {key}", v.trim()),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}
