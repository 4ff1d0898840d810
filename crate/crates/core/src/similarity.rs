//! Association-strength normalization of co-occurrence counts.

use std::io::{self, Write};

use thiserror::Error;

use crate::cooccurrence::CooccurrenceNetwork;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),
    #[error("invalid similarity entry ({i}, {j}) = {value}")]
    InvalidEntry { i: usize, j: usize, value: f64 },
}

/// Sparse symmetric similarity matrix. Only positive entries are stored, as
/// `(i, j, s)` triples with `i < j` sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    pairs: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SimilarityMatrix {
    /// Builds a matrix from arbitrary pairs. Keys are normalized to `i < j`;
    /// zero entries are dropped; a repeated pair keeps its last value.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, SimilarityError> {
        let mut entries = std::collections::BTreeMap::new();
        for (a, b, s) in pairs {
            if a >= n || b >= n || a == b || !s.is_finite() || s < 0.0 {
                return Err(SimilarityError::InvalidEntry { i: a, j: b, value: s });
            }
            if s > 0.0 {
                entries.insert((a.min(b), a.max(b)), s);
            } else {
                entries.remove(&(a.min(b), a.max(b)));
            }
        }
        let pairs: Vec<_> = entries.into_iter().map(|((i, j), s)| (i, j, s)).collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, s) in &pairs {
            adjacency[i].push((j, s));
            adjacency[j].push((i, s));
        }
        for row in &mut adjacency {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        Ok(Self { n, pairs, adjacency })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    /// Positive-similarity neighbours of `i`, ascending by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let row = &self.adjacency[i];
        row.binary_search_by_key(&j, |&(k, _)| k).map(|k| row[k].1).unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).fold(0.0, f64::max)
    }

    /// Multiplies every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0 && factor.is_finite());
        Self::from_pairs(self.n, self.pairs.iter().map(|&(i, j, s)| (i, j, s * factor))).expect("scaling preserves validity")
    }

    /// True when every node is reachable from node 0 through positive entries.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Debug dump as `i\tj\ts` lines, 1-based.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(i, j, s) in &self.pairs {
            writeln!(out, "{}\t{}\t{}", i + 1, j + 1, s)?;
        }
        Ok(())
    }
}

/// `s_ij = 2 m c_ij / (w_i w_j)`: observed co-occurrences relative to the
/// count expected if the two items occurred independently.
pub fn association_strength(net: &CooccurrenceNetwork) -> Result<SimilarityMatrix, SimilarityError> {
    let m = net.total_weight();
    if m == 0 {
        return Err(SimilarityError::DegenerateNetwork("total edge weight is zero".into()));
    }
    let w = net.strengths();
    if let Some(i) = w.iter().position(|&wi| wi == 0) {
        return Err(SimilarityError::DegenerateNetwork(format!("node '{}' has no links", net.nodes()[i].label)));
    }
    let m = m as f64;
    let pairs = net
        .edges()
        .iter()
        .map(|(&(i, j), &c)| (i, j, 2.0 * m * c as f64 / (w[i] as f64 * w[j] as f64)));
    SimilarityMatrix::from_pairs(net.len(), pairs)
}
