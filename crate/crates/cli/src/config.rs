//! Flat `key = value` config files and the resolved settings echoed into
//! output headers.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

use crate::usage;

/// Every key a config file may set.
const KNOWN_KEYS: &[&str] = &[
    "against",
    "calibrate_row",
    "cn",
    "column",
    "engine",
    "extrapolate",
    "first_column",
    "format",
    "h",
    "kappa",
    "kind",
    "lj",
    "morse",
    "mu",
    "n",
    "out",
    "phase_step",
    "potential_file",
    "power_tail",
    "rungs",
    "target",
    "title",
    "tol",
    "window",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key '{}'", i + 1, k.trim()));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }
}

/// Resolves settings as flag > config file > default and records each
/// resolved value for the output header.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    pub echoed: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Self {
            file,
            echoed: BTreeMap::new(),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.values.get(key) {
                Some(text) => Some(
                    text.parse::<T>()
                        .map_err(|e| usage(format!("config key {key} = {text}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.echoed.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.get(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.echoed.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.get(key, flag)?
            .ok_or_else(|| usage(format!("missing --{}", key.replace('_', "-"))))
    }

    pub fn note(&mut self, key: &str, value: impl Display) {
        self.echoed.insert(key.to_string(), value.to_string());
    }

    pub fn header(&self, command: &str) -> Vec<String> {
        let mut lines = vec![format!("vibrelevel {} {command}", env!("CARGO_PKG_VERSION"))];
        lines.extend(self.echoed.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }
}
