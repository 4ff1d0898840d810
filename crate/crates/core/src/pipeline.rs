//! End-to-end composition: records → network → similarities → layout,
//! clusters and overlay → [`ItemMap`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster, ClusterAssignment, DEFAULT_RESOLUTION};
use crate::cooccurrence::{build_network, largest_component, CooccurrenceNetwork, NetworkError, DEFAULT_MIN_OCCURRENCES};
use crate::corpus::{BibRecord, UnitKind};
use crate::layout::{optimize_layout, Layout, LayoutConfig, LayoutError};
use crate::map::{ItemMap, MapEdge, MapNode};
use crate::overlay::OverlayScores;
use crate::similarity::{association_strength, SimilarityError, SimilarityMatrix};
use crate::thesaurus::{apply_thesaurus_to, CleanupReport, Thesaurus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub unit: UnitKind,
    pub min_occurrences: usize,
    /// Clustering resolution γ.
    pub resolution: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub jitter_epsilon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let layout = LayoutConfig::default();
        Self {
            unit: UnitKind::Keyword,
            min_occurrences: DEFAULT_MIN_OCCURRENCES,
            resolution: DEFAULT_RESOLUTION,
            seed: layout.seed,
            restarts: layout.restarts,
            max_iterations: layout.max_iterations,
            rel_tolerance: layout.rel_tolerance,
            jitter_epsilon: layout.jitter_epsilon,
        }
    }
}

impl PipelineConfig {
    pub fn layout_config(&self) -> LayoutConfig {
        LayoutConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            jitter_epsilon: self.jitter_epsilon,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.min_occurrences == 0 {
            return Err(PipelineError::InvalidConfig("min_occurrences must be at least 1".into()));
        }
        if !(self.resolution >= 0.0 && self.resolution.is_finite()) {
            return Err(PipelineError::InvalidConfig("resolution must be a non-negative number".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(PipelineError::InvalidConfig("restarts and max_iterations must be positive".into()));
        }
        if !(self.rel_tolerance > 0.0 && self.jitter_epsilon > 0.0) {
            return Err(PipelineError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

impl PipelineError {
    /// Short machine-readable error kind.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::Network(NetworkError::EmptyNetwork { .. }) => "empty_network",
            PipelineError::Network(NetworkError::InvalidThreshold) => "invalid_config",
            PipelineError::Similarity(_) => "degenerate_network",
            PipelineError::Layout(_) => "layout_failed",
        }
    }
}

/// Every intermediate product of a pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub map: ItemMap,
    /// The connected network the map was built from.
    pub network: CooccurrenceNetwork,
    /// Labels outside the largest connected component.
    pub dropped: Vec<String>,
    pub similarity: SimilarityMatrix,
    pub layout: Layout,
    pub clusters: ClusterAssignment,
    pub overlay: OverlayScores,
}

/// Builds the map for already-curated records.
pub fn run_pipeline(records: &[BibRecord], config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let full = build_network(records, config.unit, config.min_occurrences)?;
    let (network, dropped) = largest_component(&full);
    if !dropped.is_empty() {
        tracing::info!(count = dropped.len(), "dropping items outside the largest component");
    }
    let similarity = association_strength(&network)?;
    let layout = optimize_layout(&similarity, &config.layout_config())?;
    let clusters = cluster(&similarity, config.resolution, config.seed, config.restarts);
    let overlay = OverlayScores::compute(network.nodes(), records);

    let degrees = network.degrees();
    let nodes = network
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| MapNode {
            id: i + 1,
            label: node.label.clone(),
            x: layout.positions[i][0],
            y: layout.positions[i][1],
            cluster: clusters.assignment[i],
            occurrences: node.occurrences as u64,
            links: degrees[i] as u64,
            total_link_strength: network.strengths()[i],
            avg_pub_date: overlay.scores[i],
        })
        .collect();
    let edges = network
        .edges()
        .iter()
        .map(|(&(i, j), &c)| MapEdge { source: i + 1, target: j + 1, strength: c })
        .collect();
    let map = ItemMap { nodes, edges, config: config.clone() };
    Ok(PipelineOutput { map, network, dropped, similarity, layout, clusters, overlay })
}

/// One curation round: apply the thesaurus to the configured unit, then build
/// the map.
pub fn curation_round(
    corpus: &[BibRecord],
    rules: &Thesaurus,
    config: &PipelineConfig,
) -> Result<(ItemMap, CleanupReport), PipelineError> {
    let (records, report) = apply_thesaurus_to(corpus, rules, config.unit);
    let output = run_pipeline(&records, config)?;
    Ok((output.map, report))
}
