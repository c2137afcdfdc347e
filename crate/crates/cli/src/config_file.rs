//! Flat key=value configuration files with `[section]` headers.
//!
//! The format is deliberately plain: blank lines and lines starting with
//! `#` are skipped, `[name]` opens a section, and every other line must
//! read `key = value`. Values keep their surrounding text verbatim after
//! trimming, so paths and numbers need no quoting. Later duplicates of a
//! key win, which is also how command-line overrides are applied.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// A parsed configuration plus the raw text it came from. The raw text is
/// echoed into run manifests so every artifact records the exact inputs
/// that produced it.
#[derive(Clone, Debug, Default)]
pub struct FlatConfig {
    text: String,
    sections: BTreeMap<String, BTreeMap<String, String>>,
    overrides: Vec<String>,
}

impl FlatConfig {
    /// An empty configuration, used when no `--config` file is given.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    bail!("line {}: unterminated section header {line:?}", index + 1);
                };
                let name = name.trim();
                if name.is_empty() {
                    bail!("line {}: empty section name", index + 1);
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got {line:?}", index + 1);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", index + 1);
            }
            let Some(section) = &current else {
                bail!("line {}: key {key:?} appears before any [section] header", index + 1);
            };
            sections
                .get_mut(section)
                .expect("current section was inserted when opened")
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self {
            text: text.to_string(),
            sections,
            overrides: Vec::new(),
        })
    }

    /// Applies one `section.key=value` override on top of the file.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let Some((path, value)) = spec.split_once('=') else {
            bail!("override {spec:?} must look like section.key=value");
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            bail!("override key {path:?} must look like section.key");
        };
        let (section, key) = (section.trim(), key.trim());
        if section.is_empty() || key.is_empty() {
            bail!("override {spec:?} has an empty section or key");
        }
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
        self.overrides.push(spec.to_string());
        Ok(())
    }

    /// The raw file text, for manifest echoes.
    pub fn echo(&self) -> &str {
        &self.text
    }

    /// Overrides applied so far, in application order.
    pub fn overrides(&self) -> &[String] {
        &self.overrides
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Reads and parses an optional value; `Ok(None)` when the key is
    /// absent, an error naming the key when it does not parse.
    pub fn parse<T>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(value) => Ok(Some(value)),
                Err(err) => bail!("config value {section}.{key} = {raw:?}: {err}"),
            },
        }
    }

    pub fn parse_or<T>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(section, key)?.unwrap_or(default))
    }

    /// A value that must be present, either in the file or via a flag
    /// that the caller resolved first.
    pub fn require(&self, section: &str, key: &str, flag: &str) -> Result<String> {
        match self.get(section, key) {
            Some(value) if !value.is_empty() => Ok(value.to_string()),
            _ => bail!("missing input: set {section}.{key} in the config or pass {flag}"),
        }
    }
}

/// Flag-over-config resolution: an explicit command-line value wins, the
/// config file fills in otherwise.
pub fn resolve(flag: Option<String>, config: &FlatConfig, section: &str, key: &str) -> Option<String> {
    flag.or_else(|| config.get(section, key).map(String::from))
}
