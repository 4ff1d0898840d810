//! Bibliographic CSV ingest and unit extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gazetteer::Gazetteer;

/// Lowest and highest publication years accepted as valid.
pub const YEAR_RANGE: std::ops::RangeInclusive<i32> = 1900..=2100;

/// One publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibRecord {
    /// DOI when present, else the 1-based data row index.
    pub id: String,
    pub title: String,
    /// Author names as listed, in order.
    pub authors: Vec<String>,
    pub affiliations: Vec<String>,
    pub countries: BTreeSet<String>,
    /// Canonical, deduplicated keywords.
    pub keywords: BTreeSet<String>,
    pub pub_year: Option<i32>,
    pub pub_month: Option<u8>,
    pub venue: String,
    pub citations: u64,
}

/// The kind of analysis unit a network is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Keyword,
    Author,
    Country,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Keyword => "keyword",
            UnitKind::Author => "author",
            UnitKind::Country => "country",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keyword" | "keywords" => Ok(UnitKind::Keyword),
            "author" | "authors" => Ok(UnitKind::Author),
            "country" | "countries" => Ok(UnitKind::Country),
            other => Err(format!("unknown unit kind '{other}'")),
        }
    }
}

/// Lowercases, trims and collapses inner whitespace runs to one space.
/// An empty result marks a label that should be dropped.
pub fn canonicalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The set of `kind` units a record contributes. Each unit occurs at most
/// once per record.
pub fn extract_units(record: &BibRecord, kind: UnitKind) -> BTreeSet<String> {
    match kind {
        UnitKind::Keyword => record.keywords.clone(),
        UnitKind::Author => record
            .authors
            .iter()
            .map(|a| canonicalize_label(a))
            .filter(|a| !a.is_empty())
            .collect(),
        UnitKind::Country => record.countries.clone(),
    }
}

/// Maps record roles to CSV header names. Deserializing fills missing fields
/// from the default export layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSchema {
    pub authors: String,
    pub keywords: String,
    pub year: String,
    pub affiliations: String,
    pub title: Option<String>,
    pub cited_by: Option<String>,
    pub doi: Option<String>,
    pub venue: Option<String>,
    pub month: Option<String>,
    pub keyword_delimiter: char,
    pub author_delimiter: char,
    pub affiliation_delimiter: char,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        Self {
            authors: "Authors".into(),
            keywords: "Author Keywords".into(),
            year: "Year".into(),
            affiliations: "Affiliations".into(),
            title: Some("Title".into()),
            cited_by: Some("Cited by".into()),
            doi: Some("DOI".into()),
            venue: Some("Source title".into()),
            month: Some("Month".into()),
            keyword_delimiter: ';',
            author_delimiter: ';',
            affiliation_delimiter: ';',
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("required column '{column}' (role {role}) not found in header")]
    MissingColumn { role: &'static str, column: String },
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus cache line {line}: {source}")]
    Cache { line: usize, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRow {
    pub line: u64,
    pub message: String,
}

/// Parsed records plus everything that was skipped or dropped on the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedCorpus {
    pub records: Vec<BibRecord>,
    pub skipped_without_keywords: usize,
    pub malformed: Vec<MalformedRow>,
    /// Affiliation tails with no gazetteer match, with occurrence counts.
    pub unmatched_countries: BTreeMap<String, usize>,
    /// Rows whose year cell was present but not a valid year.
    pub invalid_years: usize,
}

/// Configurable CSV parser. [`parse_corpus`] is the lenient default.
#[derive(Debug, Clone)]
pub struct CorpusParser {
    schema: CorpusSchema,
    gazetteer: Gazetteer,
    strict: bool,
}

struct Columns {
    authors: usize,
    keywords: usize,
    year: usize,
    affiliations: usize,
    title: Option<usize>,
    cited_by: Option<usize>,
    doi: Option<usize>,
    venue: Option<usize>,
    month: Option<usize>,
}

impl CorpusParser {
    pub fn new(schema: CorpusSchema) -> Self {
        Self { schema, gazetteer: Gazetteer::bundled(), strict: false }
    }

    /// In strict mode the first malformed row aborts the parse.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn gazetteer(mut self, gazetteer: Gazetteer) -> Self {
        self.gazetteer = gazetteer;
        self
    }

    fn resolve_columns(&self, header: &csv::StringRecord) -> Result<Columns, CorpusError> {
        let names: Vec<&str> = header
            .iter()
            .enumerate()
            .map(|(i, h)| if i == 0 { h.trim_start_matches('\u{feff}').trim() } else { h.trim() })
            .collect();
        let find = |name: &str| names.iter().position(|h| *h == name);
        let required = |role: &'static str, name: &str| {
            find(name).ok_or_else(|| CorpusError::MissingColumn { role, column: name.to_string() })
        };
        let optional = |name: &Option<String>| name.as_deref().and_then(find);
        Ok(Columns {
            authors: required("authors", &self.schema.authors)?,
            keywords: required("keywords", &self.schema.keywords)?,
            year: required("year", &self.schema.year)?,
            affiliations: required("affiliations", &self.schema.affiliations)?,
            title: optional(&self.schema.title),
            cited_by: optional(&self.schema.cited_by),
            doi: optional(&self.schema.doi),
            venue: optional(&self.schema.venue),
            month: optional(&self.schema.month),
        })
    }

    pub fn parse<R: Read>(&self, source: R) -> Result<ParsedCorpus, CorpusError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(source);
        let header = reader.headers()?.clone();
        let columns = self.resolve_columns(&header)?;
        let mut out = ParsedCorpus::default();
        let mut row_index = 0usize;
        let mut record = csv::StringRecord::new();
        loop {
            let line = reader.position().line();
            match reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {}
                Err(err) => {
                    let bad = MalformedRow { line, message: err.to_string() };
                    match err.kind() {
                        csv::ErrorKind::Utf8 { .. } | csv::ErrorKind::UnequalLengths { .. } => {
                            row_index += 1;
                            self.reject(&mut out, bad)?;
                            continue;
                        }
                        _ => return Err(err.into()),
                    }
                }
            }
            row_index += 1;
            let line = record.position().map_or(line, |p| p.line());
            if record.len() != header.len() {
                let message = format!("expected {} fields, found {} (unbalanced quoting?)", header.len(), record.len());
                self.reject(&mut out, MalformedRow { line, message })?;
                continue;
            }
            if let Some(rec) = self.build_record(&record, &columns, row_index, &mut out) {
                out.records.push(rec);
            } else {
                out.skipped_without_keywords += 1;
            }
        }
        Ok(out)
    }

    fn reject(&self, out: &mut ParsedCorpus, bad: MalformedRow) -> Result<(), CorpusError> {
        if self.strict {
            return Err(CorpusError::MalformedRow { line: bad.line, message: bad.message });
        }
        tracing::warn!(line = bad.line, "skipping malformed row: {}", bad.message);
        out.malformed.push(bad);
        Ok(())
    }

    fn build_record(
        &self,
        row: &csv::StringRecord,
        columns: &Columns,
        row_index: usize,
        out: &mut ParsedCorpus,
    ) -> Option<BibRecord> {
        let cell = |i: usize| row.get(i).unwrap_or("").trim();
        let opt_cell = |i: Option<usize>| i.map(cell).unwrap_or("");

        let keywords: BTreeSet<String> = cell(columns.keywords)
            .split(self.schema.keyword_delimiter)
            .map(canonicalize_label)
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return None;
        }

        let split_list = |text: &str, delim: char| -> Vec<String> {
            text.split(delim).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
        };
        let authors = split_list(cell(columns.authors), self.schema.author_delimiter);
        let affiliations = split_list(cell(columns.affiliations), self.schema.affiliation_delimiter);

        let mut countries = BTreeSet::new();
        for affiliation in &affiliations {
            match self.gazetteer.country_of_affiliation(affiliation) {
                Ok(country) => {
                    countries.insert(country.to_string());
                }
                Err(tail) => {
                    tracing::debug!(%tail, "affiliation tail not in gazetteer");
                    *out.unmatched_countries.entry(tail).or_default() += 1;
                }
            }
        }

        let year_text = cell(columns.year);
        let pub_year = year_text.parse::<i32>().ok().filter(|y| YEAR_RANGE.contains(y));
        if pub_year.is_none() && !year_text.is_empty() {
            out.invalid_years += 1;
        }
        let pub_month = opt_cell(columns.month).parse::<u8>().ok().filter(|m| (1..=12).contains(m));

        let doi = opt_cell(columns.doi);
        Some(BibRecord {
            id: if doi.is_empty() { row_index.to_string() } else { doi.to_string() },
            title: opt_cell(columns.title).to_string(),
            authors,
            affiliations,
            countries,
            keywords,
            pub_year,
            pub_month,
            venue: opt_cell(columns.venue).to_string(),
            citations: opt_cell(columns.cited_by).parse().unwrap_or(0),
        })
    }
}

/// Parses a CSV export with the bundled gazetteer, skipping malformed rows.
pub fn parse_corpus<R: Read>(source: R, schema: &CorpusSchema) -> Result<ParsedCorpus, CorpusError> {
    CorpusParser::new(schema.clone()).parse(source)
}

/// Writes records as newline-delimited JSON.
pub fn write_cache<W: Write>(records: &[BibRecord], mut out: W) -> Result<(), CorpusError> {
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| CorpusError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a newline-delimited JSON corpus cache. Blank lines are ignored.
pub fn read_cache<R: BufRead>(source: R) -> Result<Vec<BibRecord>, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Cache { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Authors,Title,Year,Source title,Cited by,DOI,Affiliations,Author Keywords\n";

    fn parse(body: &str) -> ParsedCorpus {
        parse_corpus(format!("{HEADER}{body}").as_bytes(), &CorpusSchema::default()).unwrap()
    }

    #[test]
    fn canonicalization() {
        assert_eq!(canonicalize_label("  Model-Based  Testing "), "model-based testing");
        assert_eq!(canonicalize_label("GUI testing"), "gui testing");
        assert_eq!(canonicalize_label(""), "");
        assert_eq!(canonicalize_label(" \t\n "), "");
    }

    #[test]
    fn header_only_is_empty() {
        let parsed = parse("");
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.skipped_without_keywords, 0);
    }

    #[test]
    fn keywords_are_canonical_and_deduplicated() {
        let parsed = parse("A. Smith,T,2019,V,3,,\"Chalmers, Gothenburg, Sweden\",Regression Testing; regression testing ;Mutation testing\n");
        let rec = &parsed.records[0];
        let expected: BTreeSet<String> = ["regression testing", "mutation testing"].iter().map(|s| s.to_string()).collect();
        assert_eq!(rec.keywords, expected);
        assert_eq!(rec.id, "1");
        assert_eq!(rec.pub_year, Some(2019));
        assert_eq!(rec.citations, 3);
        assert_eq!(rec.countries.iter().collect::<Vec<_>>(), vec!["sweden"]);
    }

    #[test]
    fn rows_without_keywords_are_counted_and_skipped() {
        let parsed = parse("A,T,2019,V,0,10.1/x,Lab; Uni,\na,t,2018,v,0,10.1/y,\"X, Japan\",fuzzing\n");
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.skipped_without_keywords, 1);
        assert_eq!(parsed.records[0].id, "10.1/y");
    }

    #[test]
    fn missing_required_column() {
        let err = parse_corpus("Authors,Year,Affiliations\nA,2000,X\n".as_bytes(), &CorpusSchema::default()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn { role: "keywords", .. }), "{err}");
    }

    #[test]
    fn unbalanced_quote_is_reported_and_skipped() {
        let body = "A,T,2019,V,0,,\"X, Sweden,fuzzing\nB,T,2020,V,0,,\"Y, Japan\",fuzzing\n";
        let parsed = parse(body);
        assert_eq!(parsed.malformed.len(), 1);
        assert_eq!(parsed.malformed[0].line, 2);
        assert!(parsed.records.is_empty());

        let strict = CorpusParser::new(CorpusSchema::default()).strict(true).parse(format!("{HEADER}{body}").as_bytes());
        assert!(matches!(strict, Err(CorpusError::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn bad_years_are_retained_without_year() {
        let parsed = parse("A,T,1850,V,0,,,k\nA,T,,V,0,,,k\nA,T,abc,V,0,,,k\n");
        assert_eq!(parsed.records.len(), 3);
        assert!(parsed.records.iter().all(|r| r.pub_year.is_none()));
        assert_eq!(parsed.invalid_years, 2);
    }

    #[test]
    fn unknown_affiliation_tails_are_dropped() {
        let parsed = parse("A,T,2000,V,0,,\"Lab, Atlantis; Uni, Berlin, West Germany\",k\n");
        let rec = &parsed.records[0];
        assert_eq!(rec.countries.iter().collect::<Vec<_>>(), vec!["germany"]);
        assert_eq!(parsed.unmatched_countries.get("atlantis"), Some(&1));
    }

    #[test]
    fn extract_units_by_kind() {
        let parsed = parse("Ann Lee; ann  lee; Bo Chen,T,2000,V,0,,\"Chalmers, Gothenburg, Sweden\",a;b;c\n");
        let rec = &parsed.records[0];
        assert_eq!(extract_units(rec, UnitKind::Author).len(), 2);
        assert_eq!(extract_units(rec, UnitKind::Keyword).len(), 3);
        let countries = extract_units(rec, UnitKind::Country);
        assert_eq!(countries.into_iter().collect::<Vec<_>>(), vec!["sweden".to_string()]);
        assert_eq!(extract_units(rec, UnitKind::Author), extract_units(rec, UnitKind::Author));
    }

    #[test]
    fn bom_in_header_is_tolerated() {
        let text = format!("\u{feff}{HEADER}A,T,2000,V,0,,,k\n");
        let parsed = parse_corpus(text.as_bytes(), &CorpusSchema::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
    }

    #[test]
    fn unit_kind_parsing() {
        assert_eq!("keywords".parse::<UnitKind>(), Ok(UnitKind::Keyword));
        assert_eq!("country".parse::<UnitKind>(), Ok(UnitKind::Country));
        assert!("venue".parse::<UnitKind>().is_err());
    }
}
