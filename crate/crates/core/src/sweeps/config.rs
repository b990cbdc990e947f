//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! cutoff = 3
//! tail-eps = 1e-12
//! ```
//!
//! Keys mirror the long command-line flags (`_` and `-` are equivalent).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

impl ConfigEntry {
    /// The entry as `--key value` arguments.
    pub fn to_args(&self) -> [String; 2] {
        [format!("--{}", self.key), self.value.clone()]
    }
}

/// Parses a config file; duplicate keys are an error.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out: Vec<ConfigEntry> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim().to_string();
        if key.is_empty()
            || key.starts_with('-')
            || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        {
            return Err(Error::Parse(format!("line {}: bad key `{}`", lineno + 1, k.trim())));
        }
        if value.is_empty() {
            return Err(Error::Parse(format!("line {}: `{key}` has no value", lineno + 1)));
        }
        if out.iter().any(|e| e.key == key) {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
        out.push(ConfigEntry { key, value });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = parse_config("# sweep\n\ncutoff = 3\ntail_eps=1e-12\n  out = grid.csv  \n").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[1], ConfigEntry { key: "tail-eps".into(), value: "1e-12".into() });
        assert_eq!(c[2].to_args(), ["--out".to_string(), "grid.csv".to_string()]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config("cutoff 3").is_err());
        assert!(parse_config("= 3").is_err());
        assert!(parse_config("cutoff =").is_err());
        assert!(parse_config("a=1\na=2").is_err());
        assert!(parse_config("bad key=1").is_err());
        assert!(parse_config("--x=1").is_err());
    }
}
