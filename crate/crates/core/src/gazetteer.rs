//! Country name lookup for affiliation strings.

use std::collections::BTreeMap;

use crate::corpus::canonicalize_label;

const BUNDLED: &str = include_str!("../data/countries.tsv");

/// Maps canonicalized country names and aliases to a modern canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    names: BTreeMap<String, String>,
}

impl Gazetteer {
    /// The gazetteer shipped with the crate. Historical names ("west germany",
    /// "ussr", ...) resolve to the modern country.
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED)
    }

    /// Parses `name` or `alias<TAB>canonical` lines; `#` starts a comment line.
    pub fn from_tsv(source: &str) -> Self {
        let mut names = BTreeMap::new();
        for line in source.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let name = canonicalize_label(parts.next().unwrap_or_default());
            let target = parts.next().map(canonicalize_label).unwrap_or_else(|| name.clone());
            if name.is_empty() || target.is_empty() {
                continue;
            }
            names.insert(target.clone(), target.clone());
            names.insert(name, target);
        }
        Self { names }
    }

    /// Resolves an already-canonical name.
    pub fn lookup(&self, name: &str) -> Option<&str> {
        self.names.get(name).map(String::as_str)
    }

    /// Country of a raw affiliation string, taken from its last comma-separated
    /// segment. `Err` carries the unmatched canonical segment.
    pub fn country_of_affiliation(&self, affiliation: &str) -> Result<&str, String> {
        let tail = canonicalize_label(affiliation.rsplit(',').next().unwrap_or_default());
        let tail = tail.trim_end_matches('.').trim().to_string();
        self.lookup(&tail).ok_or(tail)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for Gazetteer {
    fn default() -> Self {
        Self::bundled()
    }
}
