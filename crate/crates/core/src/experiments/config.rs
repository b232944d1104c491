//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! experiment = gamma-sweep
//! seed = 7
//!
//! [state]
//! family = even-coherent
//!
//! [sweep]
//! param = alpha
//! start = 0
//! stop = 3
//! steps = 31
//! ```
//!
//! Keys inside a section are addressed as `section.key`. Lines starting with
//! `#` or `;` are comments.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl PartialEq for Config {
    fn eq(&self, o: &Self) -> bool {
        self.entries == o.entries
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", i + 1)))?
                    .trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(Error::Config(format!("line {}: bad section name `{name}`", i + 1)));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got `{line}`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries, used: RefCell::default() })
    }

    /// Apply a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{assignment}`")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config("--set with an empty key".into()));
        }
        self.entries.insert(k.to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("`{key}` has an invalid value `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
        v.parse().map_err(|_| Error::Config(format!("`{key}` has an invalid value `{v}`")))
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: Clone,
    {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Config(format!("`{key}` has an invalid entry `{s}`"))))
                .collect(),
        }
    }

    /// All keys under `section.`, with the prefix removed.
    pub fn section(&self, section: &str) -> BTreeMap<String, String> {
        let prefix = format!("{section}.");
        let mut out = BTreeMap::new();
        for (k, v) in &self.entries {
            if let Some(rest) = k.strip_prefix(&prefix) {
                self.used.borrow_mut().insert(k.clone());
                out.insert(rest.to_string(), v.clone());
            }
        }
        out
    }

    /// Error on keys no experiment step asked for.
    pub fn check_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.entries.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unrecognized keys: {}", unknown.join(", "))))
        }
    }
}
