//! Flat `key = value` run settings.
//!
//! A command merges three layers: built-in defaults (supplied at each call
//! site), an optional config file, and `--key value` command-line overrides
//! (strongest). Every key a command reads or computes is recorded, and
//! [`Settings::write_resolved`] snapshots the effective configuration to
//! `run_config.txt` so a finished artifact directory documents exactly how
//! it was produced.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use celltraffic_core::{Error, Result};

pub struct Settings {
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    /// Merge a config file (if any) with command-line overrides, rejecting
    /// keys the current command does not understand.
    pub fn load(
        config: Option<&Path>,
        overrides: &[(String, String)],
        allowed: &[&str],
    ) -> Result<Settings> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        for (key, value) in overrides {
            values.insert(key.clone(), value.clone());
        }
        for key in values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::domain(format!(
                    "unknown setting `{key}`; this command accepts: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(Settings {
            values,
            resolved: RefCell::new(BTreeMap::new()),
        })
    }

    fn note(&self, key: &str, value: &str) {
        self.resolved
            .borrow_mut()
            .insert(key.to_string(), value.to_string());
    }

    /// Record a value the command computed (an applied default a getter
    /// could not know, or a derived quantity worth documenting).
    pub fn record(&self, key: &str, value: impl ToString) {
        self.note(key, &value.to_string());
    }

    pub fn require(&self, key: &str) -> Result<String> {
        let value = self
            .values
            .get(key)
            .cloned()
            .ok_or_else(|| Error::domain(format!("missing required setting `{key}`")))?;
        self.note(key, &value);
        Ok(value)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require(key)?))
    }

    pub fn opt_str(&self, key: &str) -> Option<String> {
        let value = self.values.get(key).cloned();
        if let Some(v) = &value {
            self.note(key, v);
        }
        value
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.opt_str(key).map(PathBuf::from)
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        let value = self
            .values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string());
        self.note(key, &value);
        value
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, raw: &str, kind: &str) -> Result<T> {
        raw.parse().map_err(|_| {
            Error::domain(format!("setting `{key}` must be {kind}, got `{raw}`"))
        })
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        self.parsed(key, &self.str(key, &default.to_string()), "an integer")
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        self.parsed(key, &self.str(key, &default.to_string()), "an integer")
    }

    pub fn i64(&self, key: &str, default: i64) -> Result<i64> {
        self.parsed(key, &self.str(key, &default.to_string()), "an integer")
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        self.parsed(key, &self.str(key, &default.to_string()), "a number")
    }

    /// A number the command will otherwise derive from the data.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.opt_str(key) {
            Some(raw) => Ok(Some(self.parsed(key, &raw, "a number")?)),
            None => Ok(None),
        }
    }

    /// Comma-separated list of integers, e.g. `1,3,6`.
    pub fn usize_list(&self, key: &str, default: &str) -> Result<Vec<usize>> {
        let raw = self.str(key, default);
        let list: Vec<usize> = raw
            .split(',')
            .map(|part| self.parsed(key, part.trim(), "a comma-separated integer list"))
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::domain(format!("setting `{key}` must not be empty")));
        }
        Ok(list)
    }

    /// Write the effective configuration as sorted `key = value` lines.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        let mut out = String::new();
        for (key, value) in self.resolved.borrow().iter() {
            out.push_str(&format!("{key} = {value}\n"));
        }
        celltraffic_core::bytes::atomic_write(&dir.join("run_config.txt"), out.as_bytes())
    }
}
