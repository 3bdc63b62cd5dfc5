//! Flat `key = value` configuration text.
//!
//! ```text
//! # comment
//! name = demo
//! [system]
//! nt = 2          # same as system.nt = 2 at top level
//! [sweep]
//! snr_db = 0, 5, 10
//! ```
//!
//! A `[section]` header prefixes the keys below it with `section.`. Keys may
//! also be written fully qualified anywhere. Later assignments to the same key
//! are an error.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Parsed key/value pairs with the line each came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if valid_key(name.trim()) => section = name.trim().to_string(),
                    _ => errors.push(format!("line {line_no}: malformed section header '{line}'")),
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("line {line_no}: expected 'key = value', got '{line}'"));
                continue;
            };
            let k = k.trim();
            if !valid_key(k) {
                errors.push(format!("line {line_no}: invalid key '{k}'"));
                continue;
            }
            let key = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
            if let Some((_, prev)) = entries.get(&key) {
                errors.push(format!("line {line_no}: '{key}' already set on line {prev}"));
                continue;
            }
            entries.insert(key, (v.trim().to_string(), line_no));
        }
        if errors.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(_, l)| *l)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'))
}
