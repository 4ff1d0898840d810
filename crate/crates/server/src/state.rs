use std::sync::{Arc, Mutex, RwLock};

use scimap_core::map::write_json;
use scimap_core::thesaurus::{ThesaurusError, ThesaurusRule};
use scimap_core::{curation_round, BibRecord, CleanupReport, ItemMap, OverlayScores, PipelineConfig, PipelineError, Thesaurus};

/// One built map. Never mutated after construction; rebuilds swap in a new one.
#[derive(Debug)]
pub struct Snapshot {
    pub map: ItemMap,
    /// `map` as served by `GET /map`.
    pub json: String,
    pub overlay: OverlayScores,
    pub report: CleanupReport,
    /// Count of successful builds, starting at 1 for the initial map.
    pub generation: u64,
}

impl Snapshot {
    fn build(corpus: &[BibRecord], rules: &Thesaurus, config: &PipelineConfig, generation: u64) -> Result<Self, PipelineError> {
        let (map, report) = curation_round(corpus, rules, config)?;
        let json = write_json(&map);
        let overlay = OverlayScores::from_scores(map.scores());
        Ok(Self { map, json, overlay, report, generation })
    }
}

/// Shared service state: the immutable corpus, the growing thesaurus and the
/// current map snapshot.
pub struct AppState {
    corpus: Arc<Vec<BibRecord>>,
    config: PipelineConfig,
    thesaurus: Mutex<Thesaurus>,
    snapshot: RwLock<Arc<Snapshot>>,
    pub(crate) rebuild: tokio::sync::Mutex<()>,
}

impl AppState {
    /// Builds the initial map. This runs the whole pipeline and blocks.
    pub fn new(corpus: Vec<BibRecord>, thesaurus: Thesaurus, config: PipelineConfig) -> Result<Self, PipelineError> {
        let snapshot = Snapshot::build(&corpus, &thesaurus, &config, 1)?;
        Ok(Self {
            corpus: Arc::new(corpus),
            config,
            thesaurus: Mutex::new(thesaurus),
            snapshot: RwLock::new(Arc::new(snapshot)),
            rebuild: tokio::sync::Mutex::new(()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot.read().expect("snapshot lock poisoned"))
    }

    pub fn thesaurus(&self) -> Thesaurus {
        self.thesaurus.lock().expect("thesaurus lock poisoned").clone()
    }

    /// Validates and appends rules; nothing is added if any rule is rejected.
    pub fn add_rules(&self, rules: Vec<ThesaurusRule>) -> Result<usize, ThesaurusError> {
        let mut thesaurus = self.thesaurus.lock().expect("thesaurus lock poisoned");
        thesaurus.extend(rules)?;
        Ok(thesaurus.len())
    }

    /// Re-runs the pipeline with the current thesaurus and publishes the result.
    /// Callers must hold the rebuild lock.
    pub(crate) fn rebuild_blocking(&self) -> Result<Arc<Snapshot>, PipelineError> {
        let rules = self.thesaurus();
        let generation = self.snapshot().generation + 1;
        let next = Arc::new(Snapshot::build(&self.corpus, &rules, &self.config, generation)?);
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::clone(&next);
        Ok(next)
    }
}
