//! Flat `key = value` text used by dataset manifests and run configs.

use std::path::Path;

use crate::error::{Error, Result};

/// One entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Blank lines and `#` comments are skipped; keys may repeat.
pub fn parse(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::data(path, i + 1, format!("expected `key = value`, got {line:?}")));
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::data(path, i + 1, "empty key"));
        }
        out.push(Entry { line: i + 1, key: key.to_string(), value: v.trim().to_string() });
    }
    Ok(out)
}
