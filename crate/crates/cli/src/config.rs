//! Run configuration files.
//!
//! The format is flat `key = value` lines grouped under `[section]` headers.
//! `#` starts a comment. Vectors are comma separated. Every key a command
//! does not recognise is reported, with its line number.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}:{line}: {message}")]
    Syntax { origin: String, line: usize, message: String },
    #[error("{origin}:{line}: [{section}] {key}: {message}")]
    Field { origin: String, line: usize, section: String, key: String, message: String },
    #[error("{origin}: [{section}] {key}: {message}")]
    Missing { origin: String, section: String, key: String, message: String },
    #[error("{origin}: cannot read configuration: {message}")]
    Io { origin: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// A parsed configuration file. Lookups mark entries as used so that
/// [`ConfigFile::finish`] can reject leftovers.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    origin: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { origin: origin.clone(), message: e.to_string() })?;
        Self::parse(&origin, &text)
    }

    pub fn parse(origin: &str, text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax { origin: origin.to_string(), line, message };
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| syntax(format!("unterminated section header '{content}'")))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(syntax(format!("invalid section name '{name}'")));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| syntax(format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(syntax("empty key".into()));
            }
            if current.is_empty() {
                return Err(syntax(format!("key '{key}' appears before any [section] header")));
            }
            let section = sections.entry(current.clone()).or_default();
            if let Some(prev) = section.get(key) {
                return Err(syntax(format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            section.insert(key.to_string(), Entry { value: value.trim().to_string(), line, used: false });
        }
        Ok(Self { origin: origin.to_string(), sections })
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    /// Marks a whole section as consumed and returns its raw entries.
    pub fn take_section(&mut self, section: &str) -> Vec<(String, String, usize)> {
        let Some(entries) = self.sections.get_mut(section) else { return Vec::new() };
        entries
            .iter_mut()
            .map(|(k, e)| {
                e.used = true;
                (k.clone(), e.value.clone(), e.line)
            })
            .collect()
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    pub fn field_error(&self, section: &str, key: &str, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::Field {
            origin: self.origin.clone(),
            line,
            section: section.to_string(),
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn missing(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Missing {
            origin: self.origin.clone(),
            section: section.to_string(),
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Line of an entry, if present (for diagnostics raised after parsing).
    pub fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section)?.get(key).map(|e| e.line)
    }

    pub fn string(&mut self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|(v, _)| v)
    }

    pub fn require_string(&mut self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.string(section, key).ok_or_else(|| self.missing(section, key, "required"))
    }

    pub fn f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else { return Ok(None) };
        parse_f64(&v).map(Some).map_err(|m| self.field_error(section, key, line, m))
    }

    pub fn f64_or(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(section, key)?.unwrap_or(default))
    }

    pub fn require_f64(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.f64(section, key)?.ok_or_else(|| self.missing(section, key, "required"))
    }

    pub fn usize(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else { return Ok(None) };
        v.parse::<usize>()
            .map(Some)
            .map_err(|_| self.field_error(section, key, line, format!("expected a non-negative integer, got '{v}'")))
    }

    pub fn u64(&mut self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else { return Ok(None) };
        v.parse::<u64>()
            .map(Some)
            .map_err(|_| self.field_error(section, key, line, format!("expected a non-negative integer, got '{v}'")))
    }

    pub fn vector(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else { return Ok(None) };
        v.split(',')
            .map(|s| parse_f64(s.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|m| self.field_error(section, key, line, m))
    }

    /// Fails on the first entry that no lookup has consumed.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let leftover = self
            .sections
            .iter()
            .flat_map(|(section, entries)| entries.iter().map(move |(key, e)| (section, key, e)))
            .filter(|(_, _, e)| !e.used)
            .min_by_key(|(_, _, e)| e.line);
        match leftover {
            Some((section, key, e)) => Err(self.field_error(section, key, e.line, "unknown key for this command")),
            None => Ok(()),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(format!("expected a number, got '{s}'")),
    }
}
