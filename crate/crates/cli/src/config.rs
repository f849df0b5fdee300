//! Flat `key = value` experiment configuration.
//!
//! The same parser reads plain config files and the provenance comment block
//! that every output CSV starts with: a line contributes a key when it looks
//! like `key = value` after stripping an optional leading `#`; anything else
//! (CSV data rows, the header row, banners, `key: value` annotations) is
//! skipped. Unknown keys are rejected per command, so typos fail loudly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Ok(Self::from_text(&text))
    }

    pub fn from_text(text: &str) -> Self {
        let mut values = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim().trim_start_matches('#').trim();
            if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                if is_key(key) {
                    values.insert(key.to_string(), value.trim().to_string());
                }
            }
        }
        Self { values }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("override '{spec}' must look like key=value"))?;
        let key = key.trim();
        if !is_key(key) {
            bail!("override '{spec}' has an invalid key");
        }
        self.set(key, value.trim());
        Ok(())
    }

    /// Rejects keys outside `allowed` (field-by-field validation happens in
    /// the typed getters).
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in self.values.keys() {
            if !allowed.contains(key.as_str()) {
                bail!(
                    "unknown config key '{key}' (accepted here: {})",
                    allowed.iter().copied().collect::<Vec<_>>().join(", ")
                );
            }
        }
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key)
            .ok_or_else(|| anyhow!("missing required config key '{key}'"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow!("config key '{key}': cannot parse '{raw}' as {kind}")),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse(key, "a real number")
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| anyhow!("missing required config key '{key}'"))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse(key, "an unsigned integer")
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        self.get_u64(key)?
            .ok_or_else(|| anyhow!("missing required config key '{key}'"))
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        self.parse(key, "an unsigned integer")
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse(key, "an unsigned integer")
    }

    /// Comma-separated list of reals.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        anyhow!("config key '{key}': cannot parse '{tok}' as a real number")
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    pub fn get_u64_list(&self, key: &str) -> Result<Option<Vec<u64>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<u64>().map_err(|_| {
                        anyhow!("config key '{key}': cannot parse '{tok}' as an integer")
                    })
                })
                .collect::<Result<Vec<u64>>>()
                .map(Some),
        }
    }

    /// Renders the resolved configuration as the provenance comment block:
    /// `command`, `seed`, `threads` first, remaining keys alphabetically.
    pub fn provenance_block(&self) -> String {
        let mut out = String::new();
        let lead = ["command", "seed", "threads"];
        for key in lead {
            if let Some(v) = self.values.get(key) {
                writeln!(out, "# {key} = {v}").unwrap();
            }
        }
        for (key, v) in &self.values {
            if !lead.contains(&key.as_str()) {
                writeln!(out, "# {key} = {v}").unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_annotated_lines() {
        let cfg = Config::from_text(
            "# uhmc 0.1.0\n# command = analyze\nm = 1.0\nL = 4\ncandidate,delta,k\n1.0,2.0,3\n# fit r_squared: 0.99\n",
        );
        assert_eq!(cfg.get_str("command"), Some("analyze"));
        assert_eq!(cfg.get_f64("m").unwrap(), Some(1.0));
        assert_eq!(cfg.get_str("L"), Some("4"));
        // data rows and `:`-annotations contribute nothing
        assert!(!cfg.contains("candidate"));
        assert!(!cfg.contains("fit"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = Config::from_text("m = 1\nsed = 42\n");
        assert!(cfg.reject_unknown(&["m", "seed"]).is_err());
        assert!(cfg.reject_unknown(&["m", "sed"]).is_ok());
    }

    #[test]
    fn typed_getters_name_the_field() {
        let cfg = Config::from_text("m = abc\n");
        let err = cfg.get_f64("m").unwrap_err().to_string();
        assert!(err.contains("'m'") && err.contains("abc"));
        let err = cfg.require_f64("missing").unwrap_err().to_string();
        assert!(err.contains("missing"));
    }

    #[test]
    fn provenance_round_trips() {
        let mut cfg = Config::from_text("m = 1.0\nseed = 7\n");
        cfg.set("command", "analyze");
        cfg.set_default("threads", "4");
        let block = cfg.provenance_block();
        let reparsed = Config::from_text(&block);
        assert_eq!(reparsed.provenance_block(), block);
    }
}
