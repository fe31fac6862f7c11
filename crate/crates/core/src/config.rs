//! Line-oriented experiment descriptions: `[section]` headers followed by
//! `key = value` lines. Sections may repeat; `#` starts a comment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Entries as a map, for family parameters.
    pub fn params(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|e| (e.key.clone(), e.value.clone())).collect()
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key)
            .ok_or_else(|| Error::validation(format!("line {}: section [{}] is missing {key:?}", self.line, self.name)))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| {
                e.value.parse::<f64>().map_err(|_| {
                    Error::validation(format!("line {}: [{}] {key} = {:?} is not a number", e.line, self.name, e.value))
                })
            })
            .transpose()
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    Error::validation(format!(
                        "line {}: [{}] {key} = {:?} is not a nonnegative integer",
                        e.line, self.name, e.value
                    ))
                })
            })
            .transpose()
    }

    /// Comma-separated list value.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|e| e.value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(Error::validation(format!(
                    "line {}: unknown key {:?} in [{}] (expected one of {})",
                    e.line,
                    e.key,
                    self.name,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub sections: Vec<Section>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            // `#` opens a comment at line start or after whitespace
            let s = match raw.find(" #").or_else(|| raw.find("\t#")) {
                Some(k) => &raw[..k],
                None => raw,
            };
            let s = s.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::validation(format!("line {line}: unterminated section header {s:?}")))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::validation(format!("line {line}: empty section name")));
                }
                sections.push(Section { name: name.to_ascii_lowercase(), line, entries: Vec::new() });
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("line {line}: expected key = value, got {s:?}")))?;
            let section = sections
                .last_mut()
                .ok_or_else(|| Error::validation(format!("line {line}: key outside of any [section]")))?;
            let key = key.trim().to_string();
            if section.get(&key).is_some() {
                return Err(Error::validation(format!("line {line}: duplicate key {key:?} in [{}]", section.name)));
            }
            section.entries.push(Entry { key, value: value.trim().to_string(), line });
        }
        Ok(Config { sections })
    }

    pub fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    /// The section if present at most once.
    pub fn single(&self, name: &str) -> Result<Option<&Section>> {
        let mut it = self.sections.iter().filter(|s| s.name == name);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(Error::validation(format!("line {}: section [{name}] may appear only once", dup.line)));
        }
        Ok(first)
    }

    pub fn required(&self, name: &str) -> Result<&Section> {
        self.single(name)?.ok_or_else(|| Error::validation(format!("missing section [{name}]")))
    }
}
