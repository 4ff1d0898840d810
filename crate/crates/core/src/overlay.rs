//! Publication-date overlays and kernel density fields.

use std::collections::BTreeSet;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::cooccurrence::NetworkNode;
use crate::corpus::BibRecord;
use crate::Point;

/// Lower and upper percentiles used to clamp scores before normalizing.
pub const NORMALIZE_PERCENTILES: (f64, f64) = (2.0, 98.0);

/// Bandwidth as a fraction of the larger coordinate range.
pub const DEFAULT_BANDWIDTH_FRACTION: f64 = 0.05;

/// Grid padding around the outermost nodes, in bandwidths.
pub const GRID_PADDING: f64 = 4.0;

/// Start of June 2015 as a fractional year (≈ 2015.417).
pub const JUNE_2015: f64 = 2015.0 + 5.0 / 12.0;

/// A record's date in 1/24-year units: mid-month when the month is known,
/// mid-year otherwise.
fn half_month_units(record: &BibRecord) -> Option<i64> {
    let year = i64::from(record.pub_year?);
    Some(match record.pub_month {
        Some(m) => 24 * year + 2 * i64::from(m) - 1,
        None => 24 * year + 12,
    })
}

/// Fractional year of a record: `year + (month − 0.5) / 12`, or `year + 0.5`
/// without a month.
pub fn record_date(record: &BibRecord) -> Option<f64> {
    half_month_units(record).map(|u| u as f64 / 24.0)
}

/// Mean fractional publication date over the node's supporting records that
/// carry a year; `None` when none does. Accumulates exactly, so the result
/// does not depend on record order.
pub fn average_pub_date(node: &NetworkNode, records: &[BibRecord]) -> Option<f64> {
    let (sum, count) = node
        .records
        .iter()
        .filter_map(|&r| half_month_units(&records[r]))
        .fold((0i64, 0i64), |(s, c), u| (s + u, c + 1));
    (count > 0).then(|| sum as f64 / (24 * count) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayScores {
    pub scores: Vec<Option<f64>>,
    /// Scores clamped to the 2nd–98th percentile range, mapped onto [0, 1].
    pub normalized: Vec<Option<f64>>,
}

/// Linear-interpolation percentile of sorted values, `p` in [0, 100].
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

impl OverlayScores {
    pub fn compute(nodes: &[NetworkNode], records: &[BibRecord]) -> Self {
        Self::from_scores(nodes.iter().map(|n| average_pub_date(n, records)).collect())
    }

    pub fn from_scores(scores: Vec<Option<f64>>) -> Self {
        let mut present: Vec<f64> = scores.iter().flatten().copied().collect();
        present.sort_by(f64::total_cmp);
        let normalized = if present.is_empty() {
            vec![None; scores.len()]
        } else {
            let lo = percentile(&present, NORMALIZE_PERCENTILES.0);
            let hi = percentile(&present, NORMALIZE_PERCENTILES.1);
            scores
                .iter()
                .map(|s| {
                    s.map(|v| if hi > lo { (v.clamp(lo, hi) - lo) / (hi - lo) } else { 0.5 })
                })
                .collect()
        };
        Self { scores, normalized }
    }
}

/// Labels whose score is strictly later than `cutoff`.
pub fn emerging_filter<'a>(
    labels: impl IntoIterator<Item = &'a str>,
    scores: &[Option<f64>],
    cutoff: f64,
) -> BTreeSet<String> {
    labels
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| s.is_some_and(|v| v > cutoff))
        .map(|(l, _)| l.to_string())
        .collect()
}

/// Gaussian kernel density sampled on a regular grid. `grid[row][col]` is the
/// value at `(x_min + col·dx, y_min + row·dy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Vec<Vec<f64>>,
    pub bounds: (f64, f64, f64, f64),
    pub bandwidth: f64,
}

impl DensityField {
    pub fn resolution(&self) -> usize {
        self.grid.len()
    }

    pub fn cell_size(&self) -> (f64, f64) {
        let steps = (self.resolution().max(2) - 1) as f64;
        ((self.bounds.1 - self.bounds.0) / steps, (self.bounds.3 - self.bounds.2) / steps)
    }

    pub fn point(&self, row: usize, col: usize) -> Point {
        let (dx, dy) = self.cell_size();
        [self.bounds.0 + col as f64 * dx, self.bounds.2 + row as f64 * dy]
    }

    /// Grid sum times cell area.
    pub fn mass(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        self.grid.iter().flatten().sum::<f64>() * dx * dy
    }

    pub fn max_value(&self) -> f64 {
        self.grid.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "bounds": [self.bounds.0, self.bounds.1, self.bounds.2, self.bounds.3],
            "bandwidth": self.bandwidth,
            "grid": self.grid,
        })
    }

    /// Plain (P2) PGM, scaled so the maximum maps to 255. Row 0 of the image
    /// is the top (largest y).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let res = self.resolution();
        let max = self.max_value();
        writeln!(out, "P2\n{res} {res}\n255")?;
        for row in self.grid.iter().rev() {
            let line: Vec<String> = row
                .iter()
                .map(|&v| if max > 0.0 { ((v / max) * 255.0).round() as u8 } else { 0 }.to_string())
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// `0.05 × max(x-range, y-range)`, or 0.05 when all points coincide.
pub fn default_bandwidth(positions: &[Point]) -> f64 {
    let range = |axis: usize| {
        let (lo, hi) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[axis]), hi.max(p[axis])));
        if positions.is_empty() { 0.0 } else { hi - lo }
    };
    let span = range(0).max(range(1));
    DEFAULT_BANDWIDTH_FRACTION * if span > 0.0 { span } else { 1.0 }
}

/// Weighted Gaussian density `Σ_i w_i exp(−‖p − x_i‖² / 2h²)` on a
/// `grid_resolution × grid_resolution` grid padded by 4h around the nodes.
pub fn density_field(positions: &[Point], weights: &[f64], grid_resolution: usize, bandwidth: f64) -> DensityField {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    assert!(grid_resolution >= 2, "grid needs at least 2 points per side");
    assert_eq!(positions.len(), weights.len());
    let pad = GRID_PADDING * bandwidth;
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    if let Some(first) = positions.first() {
        (x_min, x_max, y_min, y_max) = (first[0], first[0], first[1], first[1]);
        for p in positions {
            x_min = x_min.min(p[0]);
            x_max = x_max.max(p[0]);
            y_min = y_min.min(p[1]);
            y_max = y_max.max(p[1]);
        }
    }
    let bounds = (x_min - pad, x_max + pad, y_min - pad, y_max + pad);
    let steps = (grid_resolution - 1) as f64;
    let (dx, dy) = ((bounds.1 - bounds.0) / steps, (bounds.3 - bounds.2) / steps);
    let denom = 2.0 * bandwidth * bandwidth;
    let grid = (0..grid_resolution)
        .map(|row| {
            (0..grid_resolution)
                .map(|col| {
                    let p = [bounds.0 + col as f64 * dx, bounds.2 + row as f64 * dy];
                    positions
                        .iter()
                        .zip(weights)
                        .map(|(x, w)| {
                            let (dx, dy) = (p[0] - x[0], p[1] - x[1]);
                            w * (-(dx * dx + dy * dy) / denom).exp()
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    DensityField { grid, bounds, bandwidth }
}
