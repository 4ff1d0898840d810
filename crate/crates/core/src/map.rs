//! The final map and its file formats.
//!
//! * map file: TSV node table, one row per item;
//! * network file: `source\ttarget\tstrength` rows with 1-based ids;
//! * JSON: a single document `{nodes, edges, config}` for the viewer, with
//!   real numbers rounded to 12 significant digits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::PipelineConfig;

pub const MAP_HEADER: &str =
    "id\tlabel\tx\ty\tcluster\tweight<Occurrences>\tweight<Links>\tweight<Total link strength>\tscore<Avg. pub. date>";

/// Significant digits kept for reals in the JSON document.
pub const JSON_SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("schema mismatch at line {line}: {message}")]
    SchemaMismatch { line: usize, message: String },
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapNode {
    pub id: usize,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    #[serde(rename = "weight<Occurrences>")]
    pub occurrences: u64,
    #[serde(rename = "weight<Links>")]
    pub links: u64,
    #[serde(rename = "weight<Total link strength>")]
    pub total_link_strength: u64,
    #[serde(rename = "score<Avg. pub. date>")]
    pub avg_pub_date: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEdge {
    pub source: usize,
    pub target: usize,
    pub strength: u64,
}

/// Positions, clusters, weights and overlay scores per item, plus links and
/// the configuration that produced them. Node ids are 1-based and equal to
/// the node's position in `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMap {
    pub nodes: Vec<MapNode>,
    pub edges: Vec<MapEdge>,
    pub config: PipelineConfig,
}

impl ItemMap {
    pub fn empty(config: PipelineConfig) -> Self {
        Self { nodes: Vec::new(), edges: Vec::new(), config }
    }

    pub fn node(&self, id: usize) -> Option<&MapNode> {
        id.checked_sub(1).and_then(|i| self.nodes.get(i))
    }

    pub fn node_by_label(&self, label: &str) -> Option<&MapNode> {
        self.nodes.iter().find(|n| n.label == label)
    }

    /// Neighbours of node `id` as `(neighbour id, strength)`, strongest first,
    /// ties by id.
    pub fn neighbors(&self, id: usize) -> Vec<(usize, u64)> {
        let mut out: Vec<(usize, u64)> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.source == id {
                    Some((e.target, e.strength))
                } else if e.target == id {
                    Some((e.source, e.strength))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    pub fn positions(&self) -> Vec<crate::Point> {
        self.nodes.iter().map(|n| [n.x, n.y]).collect()
    }

    pub fn scores(&self) -> Vec<Option<f64>> {
        self.nodes.iter().map(|n| n.avg_pub_date).collect()
    }
}

/// The map file: header plus one row per node.
pub fn write_map_file(map: &ItemMap) -> String {
    let mut out = String::from(MAP_HEADER);
    out.push('\n');
    for n in &map.nodes {
        let score = n.avg_pub_date.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.id, n.label, n.x, n.y, n.cluster, n.occurrences, n.links, n.total_link_strength, score
        )
        .expect("writing to a String");
    }
    out
}

fn field<T: std::str::FromStr>(value: &str, line: usize, column: &str) -> Result<T, MapError> {
    value
        .parse()
        .map_err(|_| MapError::SchemaMismatch { line, message: format!("bad {column} value '{value}'") })
}

/// Parses a map file back into its node table.
pub fn read_map_file(text: &str) -> Result<Vec<MapNode>, MapError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == MAP_HEADER => {}
        Some((_, header)) => {
            return Err(MapError::SchemaMismatch { line: 1, message: format!("unexpected header '{header}'") });
        }
        None => return Err(MapError::SchemaMismatch { line: 1, message: "missing header".into() }),
    }
    let mut nodes = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 9 {
            return Err(MapError::SchemaMismatch { line, message: format!("expected 9 columns, found {}", cols.len()) });
        }
        nodes.push(MapNode {
            id: field(cols[0], line, "id")?,
            label: cols[1].to_string(),
            x: field(cols[2], line, "x")?,
            y: field(cols[3], line, "y")?,
            cluster: field(cols[4], line, "cluster")?,
            occurrences: field(cols[5], line, "occurrences")?,
            links: field(cols[6], line, "links")?,
            total_link_strength: field(cols[7], line, "total link strength")?,
            avg_pub_date: if cols[8].is_empty() { None } else { Some(field(cols[8], line, "score")?) },
        });
    }
    Ok(nodes)
}

/// The network file: `source\ttarget\tstrength` per link.
pub fn write_network_file(map: &ItemMap) -> String {
    let mut out = String::new();
    for e in &map.edges {
        writeln!(out, "{}\t{}\t{}", e.source, e.target, e.strength).expect("writing to a String");
    }
    out
}

pub fn read_network_file(text: &str) -> Result<Vec<MapEdge>, MapError> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 3 {
            return Err(MapError::SchemaMismatch { line: i + 1, message: format!("expected 3 columns, found {}", cols.len()) });
        }
        edges.push(MapEdge {
            source: field(cols[0], i + 1, "source")?,
            target: field(cols[1], i + 1, "target")?,
            strength: field(cols[2], i + 1, "strength")?,
        });
    }
    Ok(edges)
}

/// Rounds to `JSON_SIGNIFICANT_DIGITS` significant digits.
pub fn round_significant(value: f64) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{:.*e}", JSON_SIGNIFICANT_DIGITS - 1, value).parse().expect("formatted float parses")
}

/// The viewer document. Key order is fixed by the struct definitions.
pub fn write_json(map: &ItemMap) -> String {
    let mut rounded = map.clone();
    for n in &mut rounded.nodes {
        n.x = round_significant(n.x);
        n.y = round_significant(n.y);
        n.avg_pub_date = n.avg_pub_date.map(round_significant);
    }
    serde_json::to_string(&rounded).expect("map serializes")
}

pub fn read_json(text: &str) -> Result<ItemMap, MapError> {
    serde_json::from_str(text).map_err(|e| MapError::Json(e.to_string()))
}
