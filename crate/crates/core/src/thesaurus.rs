//! Analyst curation rules: label merges and the two removal modes.
//!
//! A rule file is UTF-8 TSV with the header `label\taction\ttarget`. Lines
//! starting with `#` are comments. Actions are `merge` (requires a target),
//! `remove_term` and `remove_term_and_studies`.
//!
//! Removal is decided on the merged view of a label: a label merged into a
//! removed target is removed too, so a merge never resurrects a removed term.
//! This makes [`apply_thesaurus`] idempotent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{canonicalize_label, BibRecord, UnitKind};

pub const HEADER: &str = "label\taction\ttarget";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RuleAction {
    Merge { target: String },
    RemoveTerm,
    RemoveTermAndStudies,
}

impl RuleAction {
    pub fn name(&self) -> &'static str {
        match self {
            RuleAction::Merge { .. } => "merge",
            RuleAction::RemoveTerm => "remove_term",
            RuleAction::RemoveTermAndStudies => "remove_term_and_studies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ThesaurusRule {
    pub label: String,
    #[serde(flatten)]
    pub action: RuleAction,
}

impl ThesaurusRule {
    pub fn merge(label: &str, target: &str) -> Self {
        Self { label: canonicalize_label(label), action: RuleAction::Merge { target: canonicalize_label(target) } }
    }

    pub fn remove_term(label: &str) -> Self {
        Self { label: canonicalize_label(label), action: RuleAction::RemoveTerm }
    }

    pub fn remove_term_and_studies(label: &str) -> Self {
        Self { label: canonicalize_label(label), action: RuleAction::RemoveTermAndStudies }
    }
}

impl fmt::Display for ThesaurusRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.action {
            RuleAction::Merge { target } => write!(f, "{}\tmerge\t{}", self.label, target),
            other => write!(f, "{}\t{}\t", self.label, other.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThesaurusError {
    #[error("merge cycle through '{0}'")]
    CyclicMerge(String),
    #[error("more than one rule for label '{0}'")]
    DuplicateRuleForLabel(String),
    #[error("line {line}: unknown action '{action}'")]
    UnknownAction { line: usize, action: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

/// A validated rule set: at most one rule per label, acyclic merges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thesaurus {
    rules: BTreeMap<String, RuleAction>,
}

/// What happens to a label once merges are followed to their end.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Fate<'a> {
    Keep(&'a str),
    Drop,
    DropStudies,
}

impl Thesaurus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules<I: IntoIterator<Item = ThesaurusRule>>(rules: I) -> Result<Self, ThesaurusError> {
        let mut thesaurus = Self::new();
        thesaurus.extend(rules)?;
        Ok(thesaurus)
    }

    /// Adds rules, validating the combined set. On error `self` is unchanged.
    pub fn extend<I: IntoIterator<Item = ThesaurusRule>>(&mut self, rules: I) -> Result<(), ThesaurusError> {
        let mut next = self.rules.clone();
        for rule in rules {
            if rule.label.is_empty() {
                return Err(ThesaurusError::Malformed { line: 0, message: "empty label".into() });
            }
            if next.contains_key(&rule.label) {
                return Err(ThesaurusError::DuplicateRuleForLabel(rule.label));
            }
            next.insert(rule.label, rule.action);
        }
        check_acyclic(&next)?;
        self.rules = next;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&RuleAction> {
        self.rules.get(label)
    }

    pub fn rules(&self) -> impl Iterator<Item = ThesaurusRule> + '_ {
        self.rules.iter().map(|(label, action)| ThesaurusRule { label: label.clone(), action: action.clone() })
    }

    /// Follows merge rules from `label` to the end of the chain.
    pub fn resolve<'a>(&'a self, label: &'a str) -> &'a str {
        let mut current = label;
        while let Some(RuleAction::Merge { target }) = self.rules.get(current) {
            current = target;
        }
        current
    }

    fn fate<'a>(&'a self, label: &'a str) -> Fate<'a> {
        let mut current = label;
        loop {
            match self.rules.get(current) {
                None => return Fate::Keep(current),
                Some(RuleAction::Merge { target }) => current = target,
                Some(RuleAction::RemoveTerm) => return Fate::Drop,
                Some(RuleAction::RemoveTermAndStudies) => return Fate::DropStudies,
            }
        }
    }

    /// Serializes to the TSV rule format, header included.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for rule in self.rules() {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }
}

fn check_acyclic(rules: &BTreeMap<String, RuleAction>) -> Result<(), ThesaurusError> {
    // 0 = unvisited, 1 = on the current chain, 2 = known to terminate
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    for start in rules.keys() {
        let mut chain = Vec::new();
        let mut current = start.as_str();
        loop {
            match state.get(current) {
                Some(2) => break,
                Some(1) => return Err(ThesaurusError::CyclicMerge(current.to_string())),
                _ => {}
            }
            match rules.get(current) {
                Some(RuleAction::Merge { target }) => {
                    state.insert(current, 1);
                    chain.push(current);
                    current = target;
                }
                _ => break,
            }
        }
        for label in chain {
            state.insert(label, 2);
        }
    }
    Ok(())
}

/// Parses a TSV rule file. The header line is optional.
pub fn parse_thesaurus<R: Read>(mut source: R) -> Result<Thesaurus, ThesaurusError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| ThesaurusError::Io(e.to_string()))?;
    let rules = parse_rules(&text)?;
    Thesaurus::from_rules(rules)
}

/// Parses rule lines without validating the set as a whole.
pub fn parse_rules(text: &str) -> Result<Vec<ThesaurusRule>, ThesaurusError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() >= 2 && fields[0].trim() == "label" && fields[1].trim() == "action" {
            continue;
        }
        if fields.len() < 2 {
            return Err(ThesaurusError::Malformed { line: line_no, message: "expected label<TAB>action[<TAB>target]".into() });
        }
        let label = canonicalize_label(fields[0]);
        if label.is_empty() {
            return Err(ThesaurusError::Malformed { line: line_no, message: "empty label".into() });
        }
        let target = fields.get(2).map(|t| canonicalize_label(t)).unwrap_or_default();
        let action = match fields[1].trim() {
            "merge" => {
                if target.is_empty() {
                    return Err(ThesaurusError::Malformed { line: line_no, message: "merge without target".into() });
                }
                if target == label {
                    return Err(ThesaurusError::CyclicMerge(label));
                }
                RuleAction::Merge { target }
            }
            "remove_term" => RuleAction::RemoveTerm,
            "remove_term_and_studies" => RuleAction::RemoveTermAndStudies,
            other => return Err(ThesaurusError::UnknownAction { line: line_no, action: other.to_string() }),
        };
        rules.push(ThesaurusRule { label, action });
    }
    Ok(rules)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanupReport {
    /// Distinct labels rewritten by a merge in at least one record.
    pub merged_labels: usize,
    /// Distinct labels removed (either mode) from at least one record.
    pub removed_terms: usize,
    /// Records dropped entirely.
    pub removed_records: usize,
    pub rounds: usize,
}

/// Applies `rules` to record keywords.
pub fn apply_thesaurus(records: &[BibRecord], rules: &Thesaurus) -> (Vec<BibRecord>, CleanupReport) {
    apply_thesaurus_to(records, rules, UnitKind::Keyword)
}

/// Applies `rules` to the units of `kind`.
///
/// For keywords a record whose keyword set becomes empty is dropped. For
/// authors and countries only `remove_term_and_studies` drops records.
pub fn apply_thesaurus_to(records: &[BibRecord], rules: &Thesaurus, kind: UnitKind) -> (Vec<BibRecord>, CleanupReport) {
    let mut merged = BTreeSet::new();
    let mut removed = BTreeSet::new();
    let mut report = CleanupReport { rounds: 1, ..CleanupReport::default() };
    let mut out = Vec::with_capacity(records.len());

    'records: for record in records {
        let mut record = record.clone();
        match kind {
            UnitKind::Keyword | UnitKind::Country => {
                let labels = if kind == UnitKind::Keyword { &record.keywords } else { &record.countries };
                let mut kept = BTreeSet::new();
                for label in labels {
                    match rules.fate(label) {
                        Fate::DropStudies => {
                            removed.insert(label.clone());
                            report.removed_records += 1;
                            continue 'records;
                        }
                        Fate::Drop => {
                            removed.insert(label.clone());
                        }
                        Fate::Keep(target) => {
                            if target != label {
                                merged.insert(label.clone());
                            }
                            kept.insert(target.to_string());
                        }
                    }
                }
                if kind == UnitKind::Keyword {
                    if kept.is_empty() {
                        report.removed_records += 1;
                        continue 'records;
                    }
                    record.keywords = kept;
                } else {
                    record.countries = kept;
                }
            }
            UnitKind::Author => {
                let mut seen = BTreeSet::new();
                let mut authors = Vec::with_capacity(record.authors.len());
                for author in &record.authors {
                    let label = canonicalize_label(author);
                    match rules.fate(&label) {
                        Fate::DropStudies => {
                            removed.insert(label);
                            report.removed_records += 1;
                            continue 'records;
                        }
                        Fate::Drop => {
                            removed.insert(label);
                        }
                        Fate::Keep(target) => {
                            let name = if target != label {
                                merged.insert(label.clone());
                                target.to_string()
                            } else {
                                author.clone()
                            };
                            if seen.insert(canonicalize_label(&name)) {
                                authors.push(name);
                            }
                        }
                    }
                }
                record.authors = authors;
            }
        }
        out.push(record);
    }
    report.merged_labels = merged.len();
    report.removed_terms = removed.len();
    (out, report)
}
