//! Co-word science mapping.
//!
//! The pipeline turns bibliographic CSV exports into maps of a research field:
//!
//! 1. [`corpus`] parses exports into [`BibRecord`]s and extracts analysis units
//!    (keywords, authors or countries).
//! 2. [`thesaurus`] applies analyst curation rules (merges and two removal modes).
//! 3. [`cooccurrence`] builds the thresholded co-occurrence network.
//! 4. [`similarity`] normalizes it with the association strength.
//! 5. [`layout`] places items in two dimensions and [`clustering`] groups them.
//! 6. [`overlay`] computes publication-date overlays and density fields.
//! 7. [`map`] assembles and serializes the final [`ItemMap`].
//!
//! [`pipeline`] strings the stages together under a single [`PipelineConfig`].

pub mod clustering;
pub mod cooccurrence;
pub mod corpus;
pub mod gazetteer;
pub mod layout;
pub mod map;
pub mod overlay;
pub mod pipeline;
pub mod similarity;
pub mod synthetic;
pub mod thesaurus;

pub use clustering::{cluster, partition_quality, ClusterAssignment};
pub use cooccurrence::{build_network, count_occurrences, largest_component, CooccurrenceNetwork};
pub use corpus::{canonicalize_label, extract_units, parse_corpus, BibRecord, CorpusSchema, UnitKind};
pub use layout::{canonical_transform, mean_pairwise_distance, optimize_layout, stress, Layout, LayoutConfig};
pub use map::ItemMap;
pub use overlay::{average_pub_date, density_field, emerging_filter, DensityField, OverlayScores};
pub use pipeline::{curation_round, run_pipeline, PipelineConfig, PipelineError};
pub use similarity::{association_strength, SimilarityMatrix};
pub use thesaurus::{apply_thesaurus, parse_thesaurus, CleanupReport, Thesaurus, ThesaurusRule};

/// A 2-D point.
pub type Point = [f64; 2];
