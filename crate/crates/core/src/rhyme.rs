//! Rhyme groups keyed by grapheme. File format: UTF-8 rows
//! `grapheme<TAB>group_id`; blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhymeTable {
    groups: BTreeMap<String, BTreeSet<String>>,
    by_grapheme: BTreeMap<String, String>,
}

/// Desk-scale default: 13 groups over Latin letters, grouped by the sound a
/// word-final letter usually carries in English.
const DEFAULT_TABLE: &[(&str, &str)] = &[
    ("a", "aA"),
    ("e", "eE"),
    ("i", "iIyY"),
    ("o", "oO"),
    ("u", "uUwW"),
    ("nasal", "nNmM"),
    ("g", "gG"),
    ("liquid", "lLrR"),
    ("sibilant", "sSzZxX"),
    ("dental", "tTdD"),
    ("labial", "pPbBfFvV"),
    ("velar", "kKcCqQ"),
    ("h", "hHjJ"),
];

impl Default for RhymeTable {
    fn default() -> Self {
        let rows = DEFAULT_TABLE
            .iter()
            .flat_map(|(group, letters)| letters.chars().map(move |c| (c.to_string(), group.to_string())));
        RhymeTable::from_rows(rows).expect("default rhyme table is consistent")
    }
}

impl RhymeTable {
    pub fn from_rows<I: IntoIterator<Item = (String, String)>>(rows: I) -> Result<Self> {
        let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut by_grapheme = BTreeMap::new();
        for (g, group) in rows {
            if let Some(prev) = by_grapheme.insert(g.clone(), group.clone()) {
                if prev != group {
                    return Err(Error::Config(format!("grapheme `{g}` listed in rhyme groups `{prev}` and `{group}`")));
                }
            }
            groups.entry(group).or_default().insert(g);
        }
        Ok(RhymeTable { groups, by_grapheme })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (g, group) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("rhyme table line {}: expected `grapheme<TAB>group`", i + 1)))?;
            let (g, group) = (g.trim(), group.trim());
            if g.is_empty() || group.is_empty() {
                return Err(Error::Config(format!("rhyme table line {}: empty field", i + 1)));
            }
            rows.push((g.to_string(), group.to_string()));
        }
        Self::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn group_of(&self, grapheme: &str) -> Option<&str> {
        self.by_grapheme.get(grapheme).map(String::as_str)
    }

    pub fn members(&self, group: &str) -> Option<&BTreeSet<String>> {
        self.groups.get(group)
    }

    pub fn groups(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}
