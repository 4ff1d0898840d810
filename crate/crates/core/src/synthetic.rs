//! Seeded synthetic corpora in the default CSV export layout, for demos and
//! tests. Records cluster into themes so maps have visible structure.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THEMES: &[&[&str]] = &[
    &[
        "mutation testing", "mutation analysis", "test suite reduction", "regression testing",
        "test prioritization", "coverage criteria", "test selection", "flaky tests",
    ],
    &[
        "search-based software testing", "genetic algorithm", "automated test generation",
        "random testing", "fuzzing", "symbolic execution", "concolic testing", "constraint solving",
    ],
    &[
        "model-based testing", "formal verification", "model checking", "finite state machine",
        "uml", "runtime verification", "conformance testing", "timed automata",
    ],
    &[
        "machine learning", "deep learning", "neural network", "test oracle", "metamorphic testing",
        "autonomous vehicles", "defect prediction", "automated program repair",
    ],
];

const PLACES: &[&str] = &[
    "Gothenburg, Sweden", "Luxembourg, Luxembourg", "Beijing, China", "London, United Kingdom",
    "Pittsburgh, PA, United States", "Bonn, West Germany", "Sao Paulo, Brazil", "Sheffield, UK",
    "Tokyo, Japan", "Montreal, Canada",
];

/// CSV text with `records` rows. The same seed always yields the same bytes.
pub fn corpus_csv(seed: u64, records: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["Authors", "Title", "Year", "Month", "Source title", "Cited by", "DOI", "Affiliations", "Author Keywords"])
        .expect("in-memory write");
    for r in 0..records {
        let theme = rng.random_range(0..THEMES.len());
        let count = rng.random_range(2..=5);
        let mut keywords: Vec<&str> = Vec::new();
        while keywords.len() < count {
            // Skewed towards the head of each theme list.
            let idx = ((rng.random::<f64>().powi(2)) * THEMES[theme].len() as f64) as usize;
            let pick = if rng.random_bool(0.1) {
                *THEMES[rng.random_range(0..THEMES.len())].choose(&mut rng).expect("non-empty theme")
            } else {
                THEMES[theme][idx]
            };
            if !keywords.contains(&pick) {
                keywords.push(pick);
            }
        }
        let keywords: Vec<String> = keywords
            .iter()
            .map(|k| if rng.random_bool(0.2) { k.to_uppercase() } else { k.to_string() })
            .collect();
        let year = 2000 + theme as i32 * 3 + rng.random_range(0..=9);
        let month = if rng.random_bool(0.5) { rng.random_range(1..=12).to_string() } else { String::new() };
        let authors: Vec<String> = (0..rng.random_range(1..=3))
            .map(|_| format!("Author {}{}", theme, rng.random_range(0..6)))
            .collect();
        let affiliations: Vec<String> = (0..rng.random_range(1..=2))
            .map(|_| format!("Institute {}, {}", rng.random_range(0..50), PLACES.choose(&mut rng).expect("non-empty")))
            .collect();
        out.write_record([
            authors.join("; "),
            format!("Study {r}"),
            year.to_string(),
            month,
            format!("Venue {}", rng.random_range(0..5)),
            rng.random_range(0..100).to_string(),
            format!("10.5555/synthetic.{seed}.{r}"),
            affiliations.join("; "),
            keywords.join("; "),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("flush")).expect("utf-8")
}
