//! Thresholded co-occurrence networks over keywords, authors or countries.
//!
//! Counting is per document: a record contributes at most 1 to a label's
//! occurrence count and at most 1 to each pair's co-occurrence count.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{extract_units, BibRecord, UnitKind};

/// Default minimum number of records a unit must occur in.
pub const DEFAULT_MIN_OCCURRENCES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("min_occurrences must be at least 1")]
    InvalidThreshold,
    #[error("no {unit} occurs in at least {min_occurrences} records")]
    EmptyNetwork { unit: UnitKind, min_occurrences: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub label: String,
    pub occurrences: usize,
    /// Positions of supporting records in the record sequence the network was
    /// built from, ascending.
    pub records: Vec<usize>,
}

/// Nodes sorted by label; edges keyed by `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceNetwork {
    pub unit: UnitKind,
    nodes: Vec<NetworkNode>,
    edges: BTreeMap<(usize, usize), u64>,
    strengths: Vec<u64>,
    total_weight: u64,
}

impl CooccurrenceNetwork {
    /// Builds a network from explicit parts. Edge keys are normalized to
    /// `i < j`; zero weights and self-pairs are ignored.
    pub fn from_parts(unit: UnitKind, nodes: Vec<NetworkNode>, edges: impl IntoIterator<Item = ((usize, usize), u64)>) -> Self {
        let n = nodes.len();
        let mut map = BTreeMap::new();
        for ((a, b), c) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b || c == 0 {
                continue;
            }
            map.insert((a.min(b), a.max(b)), c);
        }
        let mut strengths = vec![0u64; n];
        for (&(i, j), &c) in &map {
            strengths[i] += c;
            strengths[j] += c;
        }
        let total_weight = strengths.iter().sum::<u64>() / 2;
        Self { unit, nodes, edges: map, strengths, total_weight }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.edges
    }

    pub fn edge(&self, i: usize, j: usize) -> u64 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    /// Total link strength of each node: the sum of its edge weights.
    pub fn strengths(&self) -> &[u64] {
        &self.strengths
    }

    /// Total edge weight, half the sum of all strengths.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Number of distinct neighbours of each node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut degree = vec![0; self.len()];
        for &(i, j) in self.edges.keys() {
            degree[i] += 1;
            degree[j] += 1;
        }
        degree
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.label.as_str().cmp(label)).ok()
    }

    /// Neighbours of `i` with edge weights, ascending by index.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, u64)> {
        let mut out: Vec<(usize, u64)> = self
            .edges
            .iter()
            .filter_map(|(&(a, b), &c)| if a == i { Some((b, c)) } else if b == i { Some((a, c)) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    /// Writes `i\tj\tstrength` lines with 1-based ids.
    pub fn write_edges<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (&(i, j), &c) in &self.edges {
            writeln!(out, "{}\t{}\t{}", i + 1, j + 1, c)?;
        }
        Ok(())
    }

    /// Writes the node table `id\tlabel\toccurrences` with a header line.
    pub fn write_nodes<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "id\tlabel\toccurrences")?;
        for (i, node) in self.nodes.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}", i + 1, node.label, node.occurrences)?;
        }
        Ok(())
    }
}

/// Document counts per label.
pub fn count_occurrences(records: &[BibRecord], unit: UnitKind) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for record in records {
        for label in extract_units(record, unit) {
            *counts.entry(label).or_insert(0) += 1;
        }
    }
    counts
}

/// Builds the co-occurrence network of units occurring in at least
/// `min_occurrences` records. Edges are counted over surviving nodes only.
pub fn build_network(records: &[BibRecord], unit: UnitKind, min_occurrences: usize) -> Result<CooccurrenceNetwork, NetworkError> {
    if min_occurrences == 0 {
        return Err(NetworkError::InvalidThreshold);
    }
    let units: Vec<BTreeSet<String>> = records.iter().map(|r| extract_units(r, unit)).collect();
    let mut supporting: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (r, set) in units.iter().enumerate() {
        for label in set {
            supporting.entry(label.as_str()).or_default().push(r);
        }
    }
    supporting.retain(|_, recs| recs.len() >= min_occurrences);
    if supporting.is_empty() {
        return Err(NetworkError::EmptyNetwork { unit, min_occurrences });
    }

    let index: BTreeMap<&str, usize> = supporting.keys().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for set in &units {
        // BTreeSet iteration is sorted, and so are the indices.
        let present: Vec<usize> = set.iter().filter_map(|l| index.get(l.as_str()).copied()).collect();
        for (a, &i) in present.iter().enumerate() {
            for &j in &present[a + 1..] {
                *edges.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    let nodes = supporting
        .into_iter()
        .map(|(label, records)| NetworkNode { label: label.to_string(), occurrences: records.len(), records })
        .collect();
    Ok(CooccurrenceNetwork::from_parts(unit, nodes, edges))
}

/// The connected component with the most nodes, ties going to the component
/// holding the lexicographically smallest label. Also returns dropped labels.
pub fn largest_component(net: &CooccurrenceNetwork) -> (CooccurrenceNetwork, Vec<String>) {
    let n = net.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in net.edges.keys() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    // Roots are the smallest index in their component, and nodes are sorted
    // by label, so the smallest root wins ties.
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        *sizes.entry(root).or_insert(0) += 1;
    }
    let Some(best) = sizes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&root, _)| root) else {
        return (net.clone(), Vec::new());
    };

    let mut remap = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    let mut dropped = Vec::new();
    for (i, slot) in remap.iter_mut().enumerate() {
        if find(&mut parent, i) == best {
            *slot = nodes.len();
            nodes.push(net.nodes[i].clone());
        } else {
            dropped.push(net.nodes[i].label.clone());
        }
    }
    let edges = net
        .edges
        .iter()
        .filter(|(&(i, _), _)| remap[i] != usize::MAX)
        .map(|(&(i, j), &c)| ((remap[i], remap[j]), c));
    (CooccurrenceNetwork::from_parts(net.unit, nodes, edges), dropped)
}
