//! Flat `key = value` config files mirroring the CLI flags. Lines starting
//! with `#` and blank lines are ignored; flags given on the command line
//! take precedence over file values.

use std::collections::BTreeMap;
use std::path::Path;

use tvci_core::{Result, TvciError};

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            TvciError::Parse(format!(
                "{}:{}: expected 'key = value', got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
