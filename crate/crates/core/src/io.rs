//! Plain-text file formats: delimiter-separated tables with `#` provenance
//! headers, flat `key = value` blocks, and one-value-per-line scenario files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A parsed delimiter-separated table. Cells are kept as raw strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Io { path: parent.display().to_string(), message: e.to_string() })?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn sniff_delimiter(line: &str) -> char {
    [',', '\t', ';']
        .into_iter()
        .max_by_key(|d| line.matches(*d).count())
        .filter(|d| line.contains(*d))
        .unwrap_or(',')
}

impl Table {
    /// Parses text with one header row. The delimiter (comma, tab or
    /// semicolon) is taken from the header line.
    pub fn parse(text: &str) -> Result<Table> {
        let mut comments = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut delim = ',';
        let mut rows = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(c) = trimmed.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            match header {
                None => {
                    delim = sniff_delimiter(trimmed);
                    header = Some(trimmed.split(delim).map(|s| s.trim().trim_matches('"').to_string()).collect());
                }
                Some(_) => rows.push(trimmed.split(delim).map(|s| s.trim().trim_matches('"').to_string()).collect()),
            }
        }
        let header = header.ok_or_else(|| Error::Input("table has no header row".into()))?;
        Ok(Table { comments, header, rows })
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::parse(&read_text(path)?)
    }

    /// Value of a `key: value` comment line.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| c.strip_prefix(key).and_then(|r| r.strip_prefix(':')).map(str::trim))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

/// Formats a float so that parsing it back yields the identical value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn parse_f64(raw: &str) -> Option<f64> {
    match raw.trim() {
        "NA" | "NaN" | "nan" => Some(f64::NAN),
        s => s.parse().ok(),
    }
}

/// Ordered flat `key = value` block; `#` lines are comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub comments: Vec<String>,
    pub entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn parse(text: &str) -> Result<KeyValues> {
        let mut kv = KeyValues::default();
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('#') {
                kv.comments.push(c.trim().to_string());
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {}: expected `key = value`, got `{t}`", n + 1)))?;
            kv.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Input(format!("missing key `{key}`")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        parse_f64(raw).ok_or_else(|| Error::Input(format!("key `{key}`: `{raw}` is not a number")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.require_f64(key).map(Some),
        }
    }

    pub fn as_map(&self) -> BTreeMap<&str, &str> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
