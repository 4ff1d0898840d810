//! VOS layout: 2-D positions minimizing `Σ s_ij ‖x_i − x_j‖²` subject to a
//! mean pairwise distance of 1.
//!
//! The constrained problem is solved through its unconstrained counterpart
//!
//! ```text
//! f(X) = Σ_{i<j} s_ij ‖x_i − x_j‖² − Σ_{i<j} ‖x_i − x_j‖
//! ```
//!
//! whose minimizer, rescaled to unit mean distance, minimizes the constrained
//! problem. `f` is minimized by majorization: the repulsive term is bounded via
//! Cauchy–Schwarz at the current iterate `Y`, and the resulting quadratic is
//! minimized exactly by solving `2 L X = B(Y) Y`, where `L` is the similarity
//! Laplacian and `B(Y)` the Laplacian with weights `1 / ‖y_i − y_j‖`. Each step
//! cannot increase `f`.

use std::io::{self, Write};

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::SimilarityMatrix;
use crate::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("layout needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("all similarities are zero")]
    DegenerateSimilarity,
    #[error("similarity graph is not connected")]
    Disconnected,
    #[error("invalid layout config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Iteration stops once no point moves by more than this fraction of the
    /// configuration's RMS radius.
    pub rel_tolerance: f64,
    /// Minimum separation enforced between initial points.
    pub jitter_epsilon: f64,
    /// Keep the per-iteration objective log in [`Layout::trace`].
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { seed: 42, restarts: 10, max_iterations: 1000, rel_tolerance: 1e-6, jitter_epsilon: 1e-9, record_trace: false }
    }
}

impl LayoutConfig {
    fn validate(&self) -> Result<(), LayoutError> {
        if self.restarts == 0 {
            return Err(LayoutError::InvalidConfig("restarts must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(LayoutError::InvalidConfig("max_iterations must be positive"));
        }
        if [self.rel_tolerance, self.jitter_epsilon].iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(LayoutError::InvalidConfig("tolerances must be positive"));
        }
        Ok(())
    }
}

/// One accepted iterate of the unconstrained objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentStep {
    pub restart: usize,
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// Index-aligned with the similarity matrix.
    pub positions: Vec<Point>,
    /// Weighted squared-distance sum at `positions`.
    pub stress: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
    /// Index of the restart that produced `positions`.
    pub best_restart: usize,
    /// Final stress of every restart, in restart order.
    pub restart_stress: Vec<f64>,
    pub trace: Vec<DescentStep>,
}

impl Layout {
    /// Writes the iteration log as `restart,iteration,objective` CSV.
    pub fn write_trace<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "restart,iteration,objective")?;
        for step in &self.trace {
            writeln!(out, "{},{},{}", step.restart, step.iteration, step.objective)?;
        }
        Ok(())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn dist2(a: Point, b: Point) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// `Σ_{i<j} s_ij ‖x_i − x_j‖²`.
pub fn stress(positions: &[Point], sims: &SimilarityMatrix) -> f64 {
    assert_eq!(positions.len(), sims.len(), "positions must be index-aligned with the similarity matrix");
    sims.pairs().iter().map(|&(i, j, s)| s * dist2(positions[i], positions[j])).sum()
}

fn distance_sum(positions: &[Point]) -> f64 {
    let mut total = 0.0;
    for (i, &a) in positions.iter().enumerate() {
        for &b in &positions[i + 1..] {
            total += dist(a, b);
        }
    }
    total
}

/// Average Euclidean distance over all unordered pairs.
pub fn mean_pairwise_distance(positions: &[Point]) -> Result<f64, LayoutError> {
    let n = positions.len();
    if n < 2 {
        return Err(LayoutError::TooFewNodes(n));
    }
    Ok(2.0 * distance_sum(positions) / (n as f64 * (n as f64 - 1.0)))
}

/// The unconstrained objective minimized by [`optimize_layout`].
pub fn unconstrained_objective(positions: &[Point], sims: &SimilarityMatrix) -> f64 {
    stress(positions, sims) - distance_sum(positions)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Centers at the origin, rotates the first principal axis onto the
/// horizontal, then reflects each axis whose median coordinate is positive.
pub fn canonical_transform(positions: &[Point]) -> Vec<Point> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    let nf = n as f64;
    let cx = positions.iter().map(|p| p[0]).sum::<f64>() / nf;
    let cy = positions.iter().map(|p| p[1]).sum::<f64>() / nf;
    let centered: Vec<Point> = positions.iter().map(|p| [p[0] - cx, p[1] - cy]).collect();

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in &centered {
        sxx += p[0] * p[0];
        syy += p[1] * p[1];
        sxy += p[0] * p[1];
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (sin, cos) = theta.sin_cos();
    let mut rotated: Vec<Point> = centered.iter().map(|p| [cos * p[0] + sin * p[1], -sin * p[0] + cos * p[1]]).collect();

    // Rotation can leave rounding residue in the centroid.
    let rx = rotated.iter().map(|p| p[0]).sum::<f64>() / nf;
    let ry = rotated.iter().map(|p| p[1]).sum::<f64>() / nf;
    for p in &mut rotated {
        p[0] -= rx;
        p[1] -= ry;
    }

    for axis in 0..2 {
        if median(rotated.iter().map(|p| p[axis]).collect()) > 0.0 {
            for p in &mut rotated {
                p[axis] = -p[axis];
            }
        }
    }
    rotated
}

fn rescale_to_unit_mean(positions: &mut [Point]) {
    let mean = mean_pairwise_distance(positions).expect("n >= 2");
    if mean > 0.0 {
        for p in positions.iter_mut() {
            p[0] /= mean;
            p[1] /= mean;
        }
    }
}

struct RestartResult {
    positions: Vec<Point>,
    stress: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<DescentStep>,
}

struct Solver<'a> {
    sims: &'a SimilarityMatrix,
    /// Similarities scaled to unit mean; the minimizer is unchanged.
    normalized: SimilarityMatrix,
    system: Cholesky<f64, Dyn>,
    config: &'a LayoutConfig,
}

impl<'a> Solver<'a> {
    fn new(sims: &'a SimilarityMatrix, config: &'a LayoutConfig) -> Result<Self, LayoutError> {
        let n = sims.len();
        let mean = sims.pairs().iter().map(|p| p.2).sum::<f64>() / sims.pairs().len() as f64;
        let normalized = sims.scaled(1.0 / mean);
        // 2L + 11ᵀ/n is positive definite for a connected graph and agrees
        // with 2L on centered configurations.
        let mut a = DMatrix::from_element(n, n, 1.0 / n as f64);
        for &(i, j, s) in normalized.pairs() {
            a[(i, j)] -= 2.0 * s;
            a[(j, i)] -= 2.0 * s;
            a[(i, i)] += 2.0 * s;
            a[(j, j)] += 2.0 * s;
        }
        let system = Cholesky::new(a).ok_or(LayoutError::Disconnected)?;
        Ok(Self { sims, normalized, system, config })
    }

    fn initial_positions(&self, rng: &mut ChaCha8Rng) -> Vec<Point> {
        let eps = self.config.jitter_epsilon;
        let mut positions: Vec<Point> = Vec::with_capacity(self.sims.len());
        for _ in 0..self.sims.len() {
            let mut p = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            while positions.iter().any(|&q| dist(p, q) < eps) {
                p[0] += eps;
            }
            positions.push(p);
        }
        positions
    }

    /// One majorization step from `current`.
    fn step(&self, current: &[Point]) -> Vec<Point> {
        let n = current.len();
        let mut rhs = DMatrix::zeros(n, 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(current[i], current[j]);
                if d > 0.0 {
                    let gx = (current[i][0] - current[j][0]) / d;
                    let gy = (current[i][1] - current[j][1]) / d;
                    rhs[(i, 0)] += gx;
                    rhs[(i, 1)] += gy;
                    rhs[(j, 0)] -= gx;
                    rhs[(j, 1)] -= gy;
                }
            }
        }
        self.system.solve_mut(&mut rhs);
        (0..n).map(|i| [rhs[(i, 0)], rhs[(i, 1)]]).collect()
    }

    fn run(&self, restart: usize) -> RestartResult {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(restart as u64);
        let mut current = self.initial_positions(&mut rng);
        let mut objective = unconstrained_objective(&current, &self.normalized);
        let mut trace = Vec::new();
        if self.config.record_trace {
            trace.push(DescentStep { restart, iteration: 0, objective });
        }
        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.config.max_iterations {
            let next = self.step(&current);
            let next_objective = unconstrained_objective(&next, &self.normalized);
            if next_objective > objective {
                // Descent is guaranteed in exact arithmetic; an increase means
                // rounding dominates and the iterate is stationary.
                converged = true;
                break;
            }
            iterations += 1;
            let radius = (next.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / next.len() as f64).sqrt();
            let max_move = current.iter().zip(&next).map(|(&a, &b)| dist(a, b)).fold(0.0, f64::max);
            current = next;
            objective = next_objective;
            if self.config.record_trace {
                trace.push(DescentStep { restart, iteration: iterations, objective });
            }
            if max_move <= self.config.rel_tolerance * radius {
                converged = true;
                break;
            }
        }
        let mut positions = canonical_transform(&current);
        rescale_to_unit_mean(&mut positions);
        let stress = stress(&positions, self.sims);
        RestartResult { positions, stress, converged, iterations, trace }
    }
}

/// Best-of-`restarts` layout, canonically transformed and scaled to unit mean
/// pairwise distance. Restarts run in parallel; the result does not depend on
/// scheduling. Equal stress goes to the lowest restart index.
pub fn optimize_layout(sims: &SimilarityMatrix, config: &LayoutConfig) -> Result<Layout, LayoutError> {
    config.validate()?;
    let n = sims.len();
    if n < 2 {
        return Err(LayoutError::TooFewNodes(n));
    }
    if sims.pairs().is_empty() {
        return Err(LayoutError::DegenerateSimilarity);
    }
    if !sims.is_connected() {
        return Err(LayoutError::Disconnected);
    }
    if n == 2 {
        // The constraint fixes the geometry: two points at distance 1.
        let positions = vec![[-0.5, 0.0], [0.5, 0.0]];
        let stress = stress(&positions, sims);
        return Ok(Layout {
            positions,
            stress,
            converged: true,
            iterations: 0,
            seed: config.seed,
            best_restart: 0,
            restart_stress: vec![stress; config.restarts],
            trace: Vec::new(),
        });
    }

    let solver = Solver::new(sims, config)?;
    let results: Vec<RestartResult> = (0..config.restarts).into_par_iter().map(|r| solver.run(r)).collect();
    let mut best = 0;
    for (r, result) in results.iter().enumerate() {
        if result.stress < results[best].stress {
            best = r;
        }
    }
    let restart_stress = results.iter().map(|r| r.stress).collect();
    let trace = results.iter().flat_map(|r| r.trace.iter().copied()).collect();
    let chosen = results.into_iter().nth(best).expect("restarts >= 1");
    Ok(Layout {
        positions: chosen.positions,
        stress: chosen.stress,
        converged: chosen.converged,
        iterations: chosen.iterations,
        seed: config.seed,
        best_restart: best,
        restart_stress,
        trace,
    })
}
