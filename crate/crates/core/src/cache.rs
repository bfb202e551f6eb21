//! On-disk memo cache.
//!
//! The file is pretty-printed JSON, one entry per line, with keys in the
//! `g=<int>;psi=<desc>;kappa=<j:m asc>` grammar and values as canonical rational
//! strings:
//!
//! ```text
//! {
//!   "version": 1,
//!   "entries": {
//!     "g=2;psi=4;kappa=": "1/1152"
//!   }
//! }
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::moduli::IntersectionKey;
use crate::rational::{self, BigRational};

pub const CACHE_VERSION: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CacheFile {
    pub entries: BTreeMap<IntersectionKey, BigRational>,
}

#[derive(Serialize)]
struct Wire<'a> {
    version: u64,
    entries: BTreeMap<String, &'a str>,
}

impl CacheFile {
    pub fn new(entries: BTreeMap<IntersectionKey, BigRational>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let values: Vec<(String, String)> = self
            .entries
            .iter()
            .map(|(k, v)| (k.to_string(), rational::format(v)))
            .collect();
        let wire = Wire {
            version: CACHE_VERSION,
            entries: values.iter().map(|(k, v)| (k.clone(), v.as_str())).collect(),
        };
        let mut text = serde_json::to_string_pretty(&wire).expect("string map serializes");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::CacheFormat { line: e.line(), msg: e.to_string() })?;
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::CacheFormat { line: 1, msg: "top level must be an object".into() })?;
        let version = obj.get("version").and_then(Value::as_u64).ok_or_else(|| Error::CacheFormat {
            line: line_of(text, "\"version\""),
            msg: "missing or non-integer 'version'".into(),
        })?;
        if version != CACHE_VERSION {
            return Err(Error::CacheVersion { found: version, expected: CACHE_VERSION });
        }
        let raw = obj.get("entries").and_then(Value::as_object).ok_or_else(|| Error::CacheFormat {
            line: line_of(text, "\"entries\""),
            msg: "missing 'entries' object".into(),
        })?;
        let mut entries = BTreeMap::new();
        for (k, v) in raw {
            let line = line_of(text, &serde_json::to_string(k).unwrap_or_default());
            let bad = |msg: String| Error::CacheFormat { line, msg };
            let key: IntersectionKey = k.parse().map_err(|m| bad(format!("key '{k}': {m}")))?;
            let v = v.as_str().ok_or_else(|| bad(format!("value for '{k}' must be a string")))?;
            let value = rational::parse_canonical(v).map_err(|m| bad(format!("value for '{k}': {m}")))?;
            entries.insert(key, value);
        }
        Ok(Self { entries })
    }

    /// Reads a cache file; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes via a temporary file in the same directory and renames it into
    /// place, so readers never see a partial file.
    pub fn store(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_text().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// 1-based line of the first occurrence of `needle`, or 1.
fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map(|pos| text[..pos].matches('\n').count() + 1).unwrap_or(1)
}
