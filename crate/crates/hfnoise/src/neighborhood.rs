//! Neighborhood pair sets: for each grid point `t_j`, the set
//! `S_j = { t_l : |t_l - t_j| <= xi, l != j }`.
//!
//! On a sorted grid every `S_j` is a contiguous index window, so the index
//! stores one `[lo, hi]` window per point (found by a two-pointer sweep)
//! instead of materializing the pair list. The ordered double sum over
//! `(j, l)` visits each unordered pair twice; estimators that average even
//! functions of the difference iterate unordered pairs once, which yields
//! the identical value after normalization.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::sim::TickSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodIndex {
    xi: f64,
    /// Inclusive window `[lo, hi]` of indices within `xi` of `t_j`
    /// (contains `j` itself).
    windows: Vec<(usize, usize)>,
    counts: Vec<usize>,
    total: usize,
}

/// Builds the neighborhood index for window `xi`.
///
/// Inclusion uses `|t_l - t_j| <= xi` with an absolute guard of a few ulps
/// of the horizon so that equispaced grids assembled in floating point
/// keep their nominal neighbors (`xi` equal to one grid spacing must pick
/// up every adjacent pair).
pub fn build_neighborhoods(grid: &TimeGrid, xi: f64) -> Result<NeighborhoodIndex> {
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("xi must be > 0, got {xi}")));
    }
    let pts = grid.points();
    let n = pts.len();
    let tol = xi * 1e-12 + 4.0 * f64::EPSILON * grid.horizon().abs();
    let reach = xi + tol;

    let mut windows = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut total = 0usize;
    let mut lo = 0usize;
    let mut hi = 0usize;
    for j in 0..n {
        while pts[j] - pts[lo] > reach {
            lo += 1;
        }
        if hi < j {
            hi = j;
        }
        while hi + 1 < n && pts[hi + 1] - pts[j] <= reach {
            hi += 1;
        }
        windows.push((lo, hi));
        let c = hi - lo; // window size minus the point itself
        counts.push(c);
        total += c;
    }

    Ok(NeighborhoodIndex {
        xi,
        windows,
        counts,
        total,
    })
}

impl NeighborhoodIndex {
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `N_j`, the number of neighbors of each point.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `N(xi) = sum_j N_j`, the number of ordered pairs.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// All ordered pairs `(j, l)` with `t_l` in `S_j`.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.windows.iter().enumerate().flat_map(|(j, &(lo, hi))| {
            (lo..=hi).filter(move |&l| l != j).map(move |l| (j, l))
        })
    }

    /// Differences `values[l] - values[j]` over unordered pairs `j < l`.
    /// Together with the doubled normalization this reproduces the ordered
    /// double sum for even integrands.
    pub fn unordered_differences(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.windows.len());
        let mut out = Vec::with_capacity(self.total / 2);
        for (j, &(_, hi)) in self.windows.iter().enumerate() {
            for l in (j + 1)..=hi {
                out.push(values[l] - values[j]);
            }
        }
        out
    }

    /// Unordered differences of a tick series.
    pub fn series_differences(&self, series: &TickSeries) -> Vec<f64> {
        self.unordered_differences(series.values())
    }
}
