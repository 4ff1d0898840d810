//! Independent reference implementations used as test oracles. Everything here
//! works on dense matrices with plain double loops and shares no code path
//! with the library beyond its public types.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scimap_core::cooccurrence::{CooccurrenceNetwork, NetworkNode};
use scimap_core::corpus::{BibRecord, UnitKind};
use scimap_core::similarity::SimilarityMatrix;
use scimap_core::Point;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random integer co-occurrence counts on `n` nodes where every node has at
/// least one link.
pub fn random_counts(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                let v = rng.random_range(1..=12);
                c[i][j] = v;
                c[j][i] = v;
            }
        }
    }
    for i in 0..n {
        if c[i].iter().all(|&v| v == 0) {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let v = rng.random_range(1..=12);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}

/// Adds a random spanning path so the counts form a connected graph.
pub fn connect(rng: &mut ChaCha8Rng, c: &mut [Vec<u64>]) {
    for i in 1..c.len() {
        let j = rng.random_range(0..i);
        if c[i][j] == 0 {
            let v = rng.random_range(1..=12);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
}

pub fn network_from_counts(c: &[Vec<u64>]) -> CooccurrenceNetwork {
    let n = c.len();
    let nodes = (0..n).map(|i| NetworkNode { label: format!("item{i:03}"), occurrences: 1, records: vec![] }).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if c[i][j] > 0 {
                edges.push(((i, j), c[i][j]));
            }
        }
    }
    CooccurrenceNetwork::from_parts(UnitKind::Keyword, nodes, edges)
}

/// Association strength evaluated directly from a dense count matrix.
pub fn association_dense(c: &[Vec<u64>]) -> Dense {
    let n = c.len();
    let w: Vec<f64> = c.iter().map(|row| row.iter().map(|&v| v as f64).sum()).collect();
    let m = w.iter().sum::<f64>() / 2.0;
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s[i][j] = 2.0 * m * c[i][j] as f64 / (w[i] * w[j]);
            }
        }
    }
    s
}

pub fn dense_of(sims: &SimilarityMatrix) -> Dense {
    let n = sims.len();
    let mut d = vec![vec![0.0; n]; n];
    for &(i, j, s) in sims.pairs() {
        d[i][j] = s;
        d[j][i] = s;
    }
    d
}

pub fn sims_of(dense: &Dense) -> SimilarityMatrix {
    let n = dense.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j, dense[i][j]));
        }
    }
    SimilarityMatrix::from_pairs(n, pairs).unwrap()
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn stress_loop(x: &[Point], s: &Dense) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            total += s[i][j] * distance(x[i], x[j]).powi(2);
        }
    }
    total
}

pub fn mean_distance_loop(x: &[Point]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            total += distance(x[i], x[j]);
            pairs += 1;
        }
    }
    total / pairs as f64
}

pub fn distance_matrix(x: &[Point]) -> Dense {
    x.iter().map(|&a| x.iter().map(|&b| distance(a, b)).collect()).collect()
}

/// Scale-free form of the constrained objective: stress divided by the
/// squared mean distance. Its minimizers, rescaled to unit mean distance, are
/// the constrained minimizers.
pub fn constrained_ratio(x: &[Point], s: &Dense) -> f64 {
    stress_loop(x, s) / mean_distance_loop(x).powi(2)
}

/// Generic minimizer for [`constrained_ratio`]: random restarts of gradient
/// descent with central finite differences and backtracking. Returns the best
/// configuration rescaled to unit mean distance.
pub fn generic_layout(s: &Dense, seed: u64, restarts: usize, iterations: usize) -> Vec<Point> {
    let n = s.len();
    let mut rng = rng(seed);
    let mut best: Option<(f64, Vec<Point>)> = None;
    for _ in 0..restarts {
        let mut x: Vec<Point> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mut f = constrained_ratio(&x, s);
        let mut step = 0.1;
        for _ in 0..iterations {
            let h = 1e-6;
            let mut grad = vec![[0.0; 2]; n];
            for i in 0..n {
                for k in 0..2 {
                    let orig = x[i][k];
                    x[i][k] = orig + h;
                    let up = constrained_ratio(&x, s);
                    x[i][k] = orig - h;
                    let down = constrained_ratio(&x, s);
                    x[i][k] = orig;
                    grad[i][k] = (up - down) / (2.0 * h);
                }
            }
            let norm: f64 = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>().sqrt();
            if norm < 1e-12 {
                break;
            }
            loop {
                let trial: Vec<Point> = x.iter().zip(&grad).map(|(p, g)| [p[0] - step * g[0], p[1] - step * g[1]]).collect();
                let ft = constrained_ratio(&trial, s);
                if ft < f {
                    x = trial;
                    f = ft;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
            // keep the scale near 1 so finite differences stay well conditioned
            let md = mean_distance_loop(&x);
            for p in &mut x {
                p[0] /= md;
                p[1] /= md;
            }
        }
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    }
    best.unwrap().1
}

pub fn quality_loop(assignment: &[usize], s: &Dense, gamma: f64) -> f64 {
    let mut q = 0.0;
    for i in 0..assignment.len() {
        for j in (i + 1)..assignment.len() {
            if assignment[i] == assignment[j] {
                q += s[i][j] - gamma;
            }
        }
    }
    q
}

/// Maximum quality over every set partition, enumerated as restricted growth
/// strings.
pub fn exhaustive_best_quality(s: &Dense, gamma: f64) -> (f64, Vec<usize>) {
    let n = s.len();
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    fn rec(pos: usize, max_label: usize, labels: &mut Vec<usize>, s: &Dense, gamma: f64, best: &mut (f64, Vec<usize>)) {
        if pos == labels.len() {
            let q = quality_loop(labels, s, gamma);
            if q > best.0 {
                *best = (q, labels.clone());
            }
            return;
        }
        for l in 0..=max_label + 1 {
            labels[pos] = l;
            rec(pos + 1, max_label.max(l), labels, s, gamma, best);
        }
    }
    if n == 0 {
        return (0.0, vec![]);
    }
    labels[0] = 0;
    rec(1, 0, &mut labels, s, gamma, &mut best);
    best
}

/// Largest quality gain achievable by moving one node to another existing
/// cluster or to a new singleton, evaluated by full recomputation.
pub fn best_single_move_gain(assignment: &[usize], s: &Dense, gamma: f64) -> f64 {
    let base = quality_loop(assignment, s, gamma);
    let clusters: BTreeSet<usize> = assignment.iter().copied().collect();
    let fresh = clusters.iter().max().unwrap() + 1;
    let mut best = f64::NEG_INFINITY;
    let mut trial = assignment.to_vec();
    for i in 0..assignment.len() {
        for &c in clusters.iter().chain(std::iter::once(&fresh)) {
            if c == assignment[i] {
                continue;
            }
            trial[i] = c;
            best = best.max(quality_loop(&trial, s, gamma) - base);
        }
        trial[i] = assignment[i];
    }
    best
}

pub fn density_loop(positions: &[Point], weights: &[f64], p: Point, h: f64) -> f64 {
    let mut total = 0.0;
    for (x, w) in positions.iter().zip(weights) {
        total += w * (-(distance(p, *x).powi(2)) / (2.0 * h * h)).exp();
    }
    total
}

pub fn record(id: &str, keywords: &[&str], year: Option<i32>, month: Option<u8>) -> BibRecord {
    BibRecord {
        id: id.to_string(),
        title: String::new(),
        authors: vec![],
        affiliations: vec![],
        countries: BTreeSet::new(),
        keywords: keywords.iter().map(|k| k.to_string()).collect(),
        pub_year: year,
        pub_month: month,
        venue: String::new(),
        citations: 0,
    }
}

/// Co-occurrence counts by direct enumeration over records.
pub fn brute_force_pairs(records: &[BibRecord], a: &str, b: &str) -> u64 {
    records.iter().filter(|r| r.keywords.contains(a) && r.keywords.contains(b)).count() as u64
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
