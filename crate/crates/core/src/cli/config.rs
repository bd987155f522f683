//! Flat `key = value` configuration with `[section]` prefixes.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::CliError;

/// Parses config text into `section.key → value`.
///
/// Keys may also carry their section inline (`ot.method = exact`). A key
/// given twice, in any spelling that resolves to the same name, is an error.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut first_line: BTreeMap<String, usize> = BTreeMap::new();
    let mut section = String::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Usage(format!("config line {line_no}: unterminated section header")))?
                .trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(CliError::Usage(format!("config line {line_no}: bad section name `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {line_no}: expected `key = value`")))?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(CliError::Usage(format!("config line {line_no}: bad key `{key}`")));
        }
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if let Some(prev) = first_line.get(&full) {
            return Err(CliError::Usage(format!("duplicate key `{full}` (lines {prev} and {line_no})")));
        }
        first_line.insert(full.clone(), line_no);
        out.insert(full, value.trim().to_string());
    }
    Ok(out)
}

/// Effective settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn new(command: &str, mut params: BTreeMap<String, String>, allowed: &[&str]) -> Result<Self, CliError> {
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str()) && *k != "seed" && *k != "tol") {
            return Err(CliError::Usage(format!("unknown key `{bad}` for `{command}`")));
        }
        let seed = match params.remove("seed") {
            Some(s) => s.parse().map_err(|_| CliError::Usage(format!("seed `{s}` is not a 64-bit unsigned integer")))?,
            None => 0,
        };
        let tol = match params.remove("tol") {
            Some(s) => {
                let t: f64 = s.parse().map_err(|_| CliError::Usage(format!("tol `{s}` is not a number")))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(CliError::Usage(format!("tol {t} must be positive")));
                }
                Some(t)
            }
            None => None,
        };
        Ok(Self { command: command.to_string(), params, seed, tol })
    }

    /// SHA-256 of the canonical `key=value` listing, seed and tolerance included.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command={}\n", self.command));
        for (k, v) in &self.params {
            h.update(format!("{k}={v}\n"));
        }
        h.update(format!("seed={}\n", self.seed));
        if let Some(t) = self.tol {
            h.update(format!("tol={t:e}\n"));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str, flag: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Usage(format!("missing {flag} (config key `{key}`)")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => parse_f64(key, s),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(|s| parse_f64(key, s)).transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| CliError::Usage(format!("`{key}` = `{s}` is not a nonnegative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(s) => Err(CliError::Usage(format!("`{key}` = `{s}` is not a boolean"))),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => parse_list(key, s),
        }
    }
}

pub fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("`{key}` = `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("`{key}` must be finite")));
    }
    Ok(v)
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|t| parse_f64(key, t)).collect()
}
