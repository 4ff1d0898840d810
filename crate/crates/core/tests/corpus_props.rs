use std::collections::BTreeSet;

use proptest::prelude::*;
use scimap_core::corpus::{read_cache, write_cache, BibRecord, UnitKind};
use scimap_core::{canonicalize_label, extract_units, parse_corpus, CorpusSchema};

fn record_strategy() -> impl Strategy<Value = BibRecord> {
    (
        "[0-9a-z./]{1,12}",
        "\\PC{0,20}",
        prop::collection::vec("[A-Z][a-z]{1,8},? [A-Z]\\.", 0..4),
        prop::collection::vec("[A-Za-z ,]{0,20}", 0..3),
        prop::collection::btree_set("[a-z]{1,10}", 0..3),
        prop::collection::btree_set("[a-z]{1,6}( [a-z-]{1,6}){0,2}", 1..6),
        prop::option::of(1900i32..=2100),
        prop::option::of(1u8..=12),
        "\\PC{0,10}",
        any::<u64>(),
    )
        .prop_map(|(id, title, authors, affiliations, countries, keywords, pub_year, pub_month, venue, citations)| BibRecord {
            id,
            title,
            authors,
            affiliations,
            countries,
            keywords,
            pub_year,
            pub_month,
            venue,
            citations,
        })
}

proptest! {
    #[test]
    fn cache_round_trip(records in prop::collection::vec(record_strategy(), 0..20)) {
        let mut buf = Vec::new();
        write_cache(&records, &mut buf).unwrap();
        let back = read_cache(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn canonicalize_is_idempotent(raw in "\\PC{0,40}") {
        let once = canonicalize_label(&raw);
        prop_assert_eq!(canonicalize_label(&once), once.clone());
        prop_assert_eq!(once.trim(), once.as_str());
        prop_assert!(!once.contains("  "));
    }

    #[test]
    fn extract_units_is_pure(record in record_strategy()) {
        for kind in [UnitKind::Keyword, UnitKind::Author, UnitKind::Country] {
            let first = extract_units(&record, kind);
            prop_assert_eq!(&first, &extract_units(&record, kind));
            for unit in &first {
                prop_assert_eq!(canonicalize_label(unit), unit.clone());
            }
        }
    }

    #[test]
    fn csv_keywords_are_canonical_sets(keywords in prop::collection::vec("[A-Za-z][A-Za-z -]{0,12}", 1..6)) {
        let cell = keywords.join("; ");
        let csv = format!("Authors,Year,Affiliations,Author Keywords\nDoe J.,2010,\"Lund, Sweden\",\"{cell}\"\n");
        let parsed = parse_corpus(csv.as_bytes(), &CorpusSchema::default()).unwrap();
        let want: BTreeSet<String> = keywords.iter().map(|k| canonicalize_label(k)).filter(|k| !k.is_empty()).collect();
        prop_assert_eq!(&parsed.records[0].keywords, &want);
    }
}

#[test]
fn spec_row_example() {
    let csv = "Authors,Year,Affiliations,Author Keywords\nA,2019,\"Chalmers, Gothenburg, Sweden\",Regression Testing; regression testing ;Mutation testing\n";
    let parsed = parse_corpus(csv.as_bytes(), &CorpusSchema::default()).unwrap();
    let r = &parsed.records[0];
    let want: BTreeSet<String> = ["regression testing", "mutation testing"].iter().map(|s| s.to_string()).collect();
    assert_eq!(r.keywords, want);
    assert_eq!(extract_units(r, UnitKind::Country), BTreeSet::from(["sweden".to_string()]));
}
