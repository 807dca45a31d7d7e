//! Normalization into the unit cube and exact three-objective hypervolume.

use serde::{Deserialize, Serialize};

use crate::evaluation::ObjectiveVector;

use super::MetricsError;

pub const DEFAULT_REFERENCE: [f64; 3] = [-0.1, -0.1, -0.1];

/// Per-objective `(min, max)` in natural units (runtime in seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub correctness: (f64, f64),
    pub perf_gain: (f64, f64),
    pub runtime: (f64, f64),
}

impl NormBounds {
    /// Min/max over `vectors`. `None` for an empty slice.
    pub fn induced(vectors: &[ObjectiveVector]) -> Option<Self> {
        let first = vectors.first()?;
        let mut b = NormBounds {
            correctness: (first.correctness, first.correctness),
            perf_gain: (first.perf_gain, first.perf_gain),
            runtime: (first.runtime, first.runtime),
        };
        for v in &vectors[1..] {
            widen(&mut b.correctness, v.correctness);
            widen(&mut b.perf_gain, v.perf_gain);
            widen(&mut b.runtime, v.runtime);
        }
        Some(b)
    }

    pub fn as_array(&self) -> [(f64, f64); 3] {
        [self.correctness, self.perf_gain, self.runtime]
    }
}

fn widen(range: &mut (f64, f64), v: f64) {
    range.0 = range.0.min(v);
    range.1 = range.1.max(v);
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        1.0
    }
}

/// Maps objective vectors into all-maximize unit coordinates. Runtime is
/// inverted before min-max scaling; objectives with zero range map to 1.
pub fn normalize(vectors: &[ObjectiveVector], bounds: Option<NormBounds>) -> Result<(Vec<[f64; 3]>, NormBounds), MetricsError> {
    let bounds = match bounds {
        Some(b) => b,
        None => NormBounds::induced(vectors).ok_or(MetricsError::Empty)?,
    };
    let points = vectors
        .iter()
        .map(|v| {
            [
                scale(v.correctness, bounds.correctness.0, bounds.correctness.1),
                scale(v.perf_gain, bounds.perf_gain.0, bounds.perf_gain.1),
                // -runtime lies in [-max, -min]
                scale(-v.runtime, -bounds.runtime.1, -bounds.runtime.0),
            ]
        })
        .collect();
    Ok((points, bounds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeReport {
    pub raw_volume: f64,
    /// `100 * raw_volume / volume of the box from the reference to (1,1,1)`.
    pub percent: f64,
    pub reference_point: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_bounds: Option<NormBounds>,
    pub front_size: usize,
    pub convention: String,
}

/// Area dominated by 2-D points above `reference`.
fn area2d(points: &mut [[f64; 2]], reference: [f64; 2]) -> f64 {
    points.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut area = 0.0;
    let mut best_y = reference[1];
    for i in 0..points.len() {
        best_y = best_y.max(points[i][1]);
        let next_x = points.get(i + 1).map_or(reference[0], |p| p[0]);
        area += (points[i][0] - next_x) * (best_y - reference[1]);
    }
    area
}

/// Exact volume dominated by `points` (maximization) above `reference`.
///
/// Sweeps the third coordinate from the top down; each slab between two
/// consecutive heights contributes its height times the 2-D area of every
/// point at or above it. Points dominated in the slice are pruned on insert.
pub fn hypervolume_raw(points: &[[f64; 3]], reference: [f64; 3]) -> Result<f64, MetricsError> {
    for p in points {
        if p.iter().zip(&reference).any(|(x, r)| !x.is_finite() || x <= r) {
            return Err(MetricsError::NotAboveReference(*p));
        }
    }
    // weakly dominated points (and repeats) would only split slabs, which
    // perturbs the float sum without adding volume
    let mut sorted: Vec<[f64; 3]> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let covered = points.iter().enumerate().any(|(j, q)| {
            j != i && q.iter().zip(p).all(|(a, b)| a >= b) && (q != p || j < i)
        });
        if !covered {
            sorted.push(*p);
        }
    }
    sorted.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let mut slice: Vec<[f64; 2]> = Vec::new();
    let mut volume = 0.0;
    for (i, p) in sorted.iter().enumerate() {
        let q = [p[0], p[1]];
        if !slice.iter().any(|s| s[0] >= q[0] && s[1] >= q[1]) {
            slice.retain(|s| !(q[0] >= s[0] && q[1] >= s[1]));
            slice.push(q);
        }
        let below = sorted.get(i + 1).map_or(reference[2], |n| n[2]);
        let height = p[2] - below;
        if height > 0.0 {
            volume += height * area2d(&mut slice, [reference[0], reference[1]]);
        }
    }
    Ok(volume)
}

pub fn hypervolume3(points: &[[f64; 3]], reference: [f64; 3]) -> Result<HypervolumeReport, MetricsError> {
    let raw_volume = hypervolume_raw(points, reference)?;
    let full: f64 = reference.iter().map(|r| 1.0 - r).product();
    Ok(HypervolumeReport {
        raw_volume,
        percent: raw_volume / full * 100.0,
        reference_point: reference,
        normalization_bounds: None,
        front_size: points.len(),
        convention: format!(
            "objectives min-max normalized to [0,1] (runtime inverted); percent = 100 * volume / {full:.6}"
        ),
    })
}

/// Normalizes `vectors` (induced bounds unless given) and measures them.
pub fn hypervolume_of(
    vectors: &[ObjectiveVector],
    bounds: Option<NormBounds>,
    reference: [f64; 3],
) -> Result<HypervolumeReport, MetricsError> {
    let (points, bounds) = normalize(vectors, bounds)?;
    let mut report = hypervolume3(&points, reference)?;
    report.normalization_bounds = Some(bounds);
    Ok(report)
}
