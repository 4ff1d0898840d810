//! Clustering by maximizing `Σ_{i<j} δ(c_i, c_j) (s_ij − γ)` with the smart
//! local moving algorithm.
//!
//! Each pass of the search:
//! 1. moves single nodes between clusters while the quality improves;
//! 2. splits every cluster into sub-clusters by local moving inside the
//!    cluster, starting from singletons;
//! 3. aggregates sub-clusters into a reduced network whose initial partition
//!    is the one from step 1, and recurses on it.
//!
//! Passes repeat until one yields no gain above [`GAIN_EPSILON`].

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::similarity::SimilarityMatrix;

/// Quality changes at or below this are treated as no change.
pub const GAIN_EPSILON: f64 = 1e-12;

pub const DEFAULT_RESOLUTION: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// 1-based cluster id per node. Cluster 1 is the largest; equal sizes are
    /// ordered by their smallest node index.
    pub assignment: Vec<usize>,
    pub quality: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.assignment.iter().copied().max().unwrap_or(0)
    }
}

/// `Σ_{i<j, c_i = c_j} (s_ij − γ)`. Same-cluster pairs with zero similarity
/// contribute `−γ` each.
pub fn partition_quality(assignment: &[usize], sims: &SimilarityMatrix, gamma: f64) -> f64 {
    assert_eq!(assignment.len(), sims.len());
    let internal: f64 = sims
        .pairs()
        .iter()
        .filter(|&&(i, j, _)| assignment[i] == assignment[j])
        .map(|&(_, _, s)| s)
        .sum();
    let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for &c in assignment {
        *sizes.entry(c).or_insert(0) += 1;
    }
    let same_pairs: u64 = sizes.values().map(|&k| k * (k - 1) / 2).sum();
    internal - gamma * same_pairs as f64
}

/// Weighted network used by the search. Node weights count the original nodes
/// an aggregated node stands for.
#[derive(Debug, Clone)]
struct Network {
    weights: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Network {
    fn from_sims(sims: &SimilarityMatrix) -> Self {
        Self {
            weights: vec![1.0; sims.len()],
            adjacency: (0..sims.len()).map(|i| sims.neighbors(i).to_vec()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn subnetwork(&self, nodes: &[usize]) -> Network {
        let mut local = vec![usize::MAX; self.len()];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k;
        }
        let adjacency = nodes
            .iter()
            .map(|&i| {
                self.adjacency[i]
                    .iter()
                    .filter(|&&(j, _)| local[j] != usize::MAX)
                    .map(|&(j, s)| (local[j], s))
                    .collect()
            })
            .collect();
        Network { weights: nodes.iter().map(|&i| self.weights[i]).collect(), adjacency }
    }

    /// Collapses nodes by `groups` (ids `0..count`); internal links vanish.
    fn aggregate(&self, groups: &[usize], count: usize) -> Network {
        let mut weights = vec![0.0; count];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        for i in 0..self.len() {
            let a = groups[i];
            weights[a] += self.weights[i];
            for &(j, s) in &self.adjacency[i] {
                let b = groups[j];
                if a != b {
                    *links[a].entry(b).or_insert(0.0) += s;
                }
            }
        }
        Network { weights, adjacency: links.into_iter().map(|m| m.into_iter().collect()).collect() }
    }
}

/// Relabels ids to `0..K` in order of first appearance; returns K.
fn compact(clusters: &mut [usize]) -> usize {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for c in clusters.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// Repeated single-node moves until a full pass changes nothing. Returns
/// whether any node moved.
fn local_moving(net: &Network, clusters: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) -> bool {
    let n = net.len();
    if n == 0 {
        return false;
    }
    let mut cluster_weight = vec![0.0; n];
    let mut cluster_size = vec![0usize; n];
    for i in 0..n {
        cluster_weight[clusters[i]] += net.weights[i];
        cluster_size[clusters[i]] += 1;
    }
    let mut unused: Vec<usize> = (0..n).filter(|&c| cluster_size[c] == 0).rev().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let current = clusters[i];
            let wi = net.weights[i];
            for &(j, s) in &net.adjacency[i] {
                let c = clusters[j];
                if link_to[c] == 0.0 {
                    touched.push(c);
                }
                link_to[c] += s;
            }
            cluster_weight[current] -= wi;
            cluster_size[current] -= 1;
            if cluster_size[current] == 0 {
                unused.push(current);
            }

            let stay_gain = link_to[current] - gamma * wi * cluster_weight[current];
            let mut best = current;
            let empty = *unused.last().expect("a node's own cluster frees up or some id is unused");
            let mut candidates: Vec<usize> = touched.iter().copied().filter(|&c| c != current).collect();
            if empty != current {
                candidates.push(empty);
            }
            candidates.sort_unstable();
            candidates.dedup();
            let mut top: Option<(usize, f64)> = None;
            for c in candidates {
                let gain = link_to[c] - gamma * wi * cluster_weight[c];
                if top.is_none_or(|(_, g)| gain > g) {
                    top = Some((c, gain));
                }
            }
            if let Some((c, gain)) = top {
                if gain > stay_gain + GAIN_EPSILON {
                    best = c;
                }
            }

            if cluster_size[best] == 0 {
                let pos = unused.iter().rposition(|&c| c == best).expect("empty cluster is tracked");
                unused.remove(pos);
            }
            cluster_weight[best] += wi;
            cluster_size[best] += 1;
            if best != current {
                clusters[i] = best;
                moved = true;
            }
            for c in touched.drain(..) {
                link_to[c] = 0.0;
            }
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    any_move
}

fn smart_local_moving(net: &Network, clusters: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) {
    local_moving(net, clusters, gamma, rng);
    let k = compact(clusters);
    let n = net.len();
    if k == n {
        return;
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..n {
        members[clusters[i]].push(i);
    }
    let mut sub_of = vec![0usize; n];
    let mut sub_cluster_of: Vec<usize> = Vec::new();
    for (c, nodes) in members.iter().enumerate() {
        let sub = net.subnetwork(nodes);
        let mut sub_clusters: Vec<usize> = (0..nodes.len()).collect();
        local_moving(&sub, &mut sub_clusters, gamma, rng);
        let count = compact(&mut sub_clusters);
        let offset = sub_cluster_of.len();
        for (local, &i) in nodes.iter().enumerate() {
            sub_of[i] = offset + sub_clusters[local];
        }
        sub_cluster_of.extend(std::iter::repeat_n(c, count));
    }
    let count = sub_cluster_of.len();
    if count == n {
        return;
    }
    let reduced = net.aggregate(&sub_of, count);
    let mut reduced_clusters = sub_cluster_of;
    smart_local_moving(&reduced, &mut reduced_clusters, gamma, rng);
    for i in 0..n {
        clusters[i] = reduced_clusters[sub_of[i]];
    }
}

fn quality_of(net: &Network, clusters: &[usize], gamma: f64) -> f64 {
    let mut internal = 0.0;
    for i in 0..net.len() {
        for &(j, s) in &net.adjacency[i] {
            if i < j && clusters[i] == clusters[j] {
                internal += s;
            }
        }
    }
    let mut sizes: BTreeMap<usize, f64> = BTreeMap::new();
    for &c in clusters {
        *sizes.entry(c).or_insert(0.0) += 1.0;
    }
    internal - gamma * sizes.values().map(|k| k * (k - 1.0) / 2.0).sum::<f64>()
}

fn search(net: &Network, gamma: f64, seed: u64, restart: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let mut clusters: Vec<usize> = (0..net.len()).collect();
    let mut quality = 0.0;
    loop {
        let mut candidate = clusters.clone();
        smart_local_moving(net, &mut candidate, gamma, &mut rng);
        let candidate_quality = quality_of(net, &candidate, gamma);
        if candidate_quality <= quality + GAIN_EPSILON {
            break;
        }
        clusters = candidate;
        quality = candidate_quality;
    }
    clusters
}

/// Renumbers to 1-based ids by descending size, ties by smallest member.
fn renumber(clusters: &[usize]) -> Vec<usize> {
    let mut groups: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, &c) in clusters.iter().enumerate() {
        let entry = groups.entry(c).or_insert((0, i));
        entry.0 += 1;
    }
    let mut order: Vec<(usize, usize, usize)> = groups.into_iter().map(|(c, (size, first))| (c, size, first)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let ids: BTreeMap<usize, usize> = order.iter().enumerate().map(|(k, &(c, _, _))| (c, k + 1)).collect();
    clusters.iter().map(|c| ids[c]).collect()
}

/// Best of `restarts` seeded searches; equal quality goes to the lowest
/// restart index. The result is local-move optimal: no single node can be
/// moved to another or a new cluster with a gain above [`GAIN_EPSILON`].
pub fn cluster(sims: &SimilarityMatrix, gamma: f64, seed: u64, restarts: usize) -> ClusterAssignment {
    assert!(gamma >= 0.0 && gamma.is_finite(), "resolution must be a non-negative number");
    let net = Network::from_sims(sims);
    let runs: Vec<(Vec<usize>, f64)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let assignment = renumber(&search(&net, gamma, seed, r));
            let quality = partition_quality(&assignment, sims, gamma);
            (assignment, quality)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = r;
        }
    }
    let (assignment, quality) = runs.into_iter().nth(best).expect("at least one restart");
    ClusterAssignment { assignment, quality, gamma, seed }
}
