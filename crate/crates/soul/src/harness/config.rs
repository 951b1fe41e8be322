//! Flat `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment, blank lines ignored. Parsing
//! keeps the pairs in a sorted map so serialization is canonical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, SoulError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Blr,
    Audio,
    RandomEffects,
    ToyGaussian,
}

impl FromStr for Experiment {
    type Err = SoulError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blr" => Ok(Experiment::Blr),
            "audio" => Ok(Experiment::Audio),
            "random_effects" => Ok(Experiment::RandomEffects),
            "toy_gaussian" => Ok(Experiment::ToyGaussian),
            other => Err(SoulError::InvalidArgument(format!(
                "unknown experiment '{other}'"
            ))),
        }
    }
}

/// Parsed configuration: a canonical key/value map plus typed accessors.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    pairs: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SoulError::Parse {
                line: lineno + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(SoulError::Parse {
                    line: lineno + 1,
                    message: "empty key".into(),
                });
            }
            pairs.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Canonical form of a config text: comments stripped, whitespace
    /// trimmed, keys sorted. `serialize(parse(t)) == normalize(t)`.
    pub fn normalize(text: &str) -> Result<String> {
        Ok(Self::parse(text)?.serialize())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.pairs.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.pairs.contains_key(key)
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.pairs
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| SoulError::InvalidArgument(format!("missing config key '{key}'")))
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.raw(key)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.raw(key)?.parse().map_err(|_| {
            SoulError::InvalidArgument(format!("config key '{key}' is not a number"))
        })
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.raw(key)?.parse().map_err(|_| {
            SoulError::InvalidArgument(format!("config key '{key}' is not an integer"))
        })
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.raw(key)?.parse().map_err(|_| {
            SoulError::InvalidArgument(format!("config key '{key}' is not an integer"))
        })
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.contains(key) {
            self.get_f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn get_u64_or(&self, key: &str, default: u64) -> Result<u64> {
        if self.contains(key) {
            self.get_u64(key)
        } else {
            Ok(default)
        }
    }

    pub fn get_usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.contains(key) {
            self.get_usize(key)
        } else {
            Ok(default)
        }
    }

    /// Comma-separated list of floats.
    pub fn get_vec_f64(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)?
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| {
                    SoulError::InvalidArgument(format!(
                        "config key '{key}' has a non-numeric entry '{}'",
                        s.trim()
                    ))
                })
            })
            .collect()
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.get_str("experiment")?.parse()
    }
}
