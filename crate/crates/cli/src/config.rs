//! Flat `key = value` run files with `[section]` headers.
//!
//! ```text
//! [model]
//! h = 0.6
//! lambda = 1
//!
//! [run]
//! t_list = 50, 100, 200
//! ```
//!
//! Lines starting with `#` or `;` are comments. Keys are looked up as
//! `section.key`; anything outside the known set is rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

const KNOWN_KEYS: &[&str] = &[
    "model.h",
    "model.lambda",
    "model.omega",
    "model.a",
    "model.z0_re",
    "model.z0_im",
    "grid.t",
    "grid.n",
    "grid.dt",
    "run.seed",
    "run.workers",
    "run.replicas",
    "run.t_list",
    "run.input",
    "run.out",
    "chaos.n",
    "chaos.count",
    "asymptotics.six_region",
    "asymptotics.six_region_t",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut section = String::new();
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
            let key = format!("{section}.{}", k.trim());
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", no + 1));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", no + 1));
            }
        }
        Ok(RunConfig { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("config key `{key}`: cannot parse `{v}`")))
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.raw(key).map(parse_list).transpose()
    }
}

/// Comma-separated floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse `{}` as a number", p.trim())))
        .collect()
}
