//! Localized empirical characteristic function of the measurement error.
//!
//! For pair differences `d` taken within a window `xi`,
//!
//! ```text
//! fhat_{U,1}(s; xi) = | mean cos(s d) |^(1/2)
//! ```
//!
//! estimates the error characteristic function (real by symmetry), and its
//! square estimates the characteristic function of the difference of two
//! independent errors. The absolute value is applied before the square
//! root, exactly as in the estimator's definition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodIndex;
use crate::sim::TickSeries;
use crate::stats::KahanSum;
use crate::trig::{cos_sum_direct, weighted_cos_sum, EquiGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharFnKind {
    /// `fhat_{U,1}`: square root scale, one error.
    ErrorFU1,
    /// `fhat_{U~}`: squared scale, difference of two errors.
    DiffFUtilde,
}

/// A real characteristic-function estimate sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharFnEstimate {
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub xi: f64,
    pub kind: CharFnKind,
}

impl CharFnEstimate {
    /// Largest frequency available on the grid.
    pub fn s_max(&self) -> f64 {
        self.s_grid.iter().cloned().fold(0.0, f64::max)
    }
}

/// Default frequency grid: symmetric, 2048 points spanning `[-smax, smax]`
/// at midpoints `+-(k + 1/2) smax/1024` (the inversion consumes the
/// nonnegative half; the estimator is even).
pub fn default_s_grid(smax: f64) -> Vec<f64> {
    assert!(smax > 0.0);
    let half = 1024usize;
    let step = smax / half as f64;
    let pos: Vec<f64> = (0..half).map(|k| (k as f64 + 0.5) * step).collect();
    let mut grid: Vec<f64> = pos.iter().rev().map(|&s| -s).collect();
    grid.extend(&pos);
    grid
}

/// Mean of `cos(s d)` over the differences, one value per `s`.
pub fn mean_cos(diffs: &[f64], s_grid: &[f64]) -> Vec<f64> {
    let n = diffs.len() as f64;
    let sums = match EquiGrid::detect(s_grid) {
        Some(grid) => weighted_cos_sum(diffs, None, &grid),
        None => cos_sum_direct(diffs, None, s_grid),
    };
    sums.into_iter().map(|v| v / n).collect()
}

/// `fhat_{U,1}` from precomputed pair differences.
pub fn ecf_error_from_diffs(diffs: &[f64], s_grid: &[f64], xi: f64) -> Result<CharFnEstimate> {
    if diffs.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    if s_grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite frequency".into()));
    }
    let values = mean_cos(diffs, s_grid)
        .into_iter()
        .map(|m| m.abs().sqrt())
        .collect();
    Ok(CharFnEstimate {
        s_grid: s_grid.to_vec(),
        values,
        xi,
        kind: CharFnKind::ErrorFU1,
    })
}

/// `fhat_{U,1}(s; xi)` over the neighborhood pairs of a series.
pub fn ecf_error(
    series: &TickSeries,
    nbhd: &NeighborhoodIndex,
    s_grid: &[f64],
) -> Result<CharFnEstimate> {
    let diffs = nbhd.series_differences(series);
    ecf_error_from_diffs(&diffs, s_grid, nbhd.xi())
}

/// `fhat_{U~} = fhat_{U,1}^2`, the difference-law characteristic function.
pub fn ecf_diff(
    series: &TickSeries,
    nbhd: &NeighborhoodIndex,
    s_grid: &[f64],
) -> Result<CharFnEstimate> {
    let mut est = ecf_error(series, nbhd, s_grid)?;
    for v in &mut est.values {
        *v = *v * *v;
    }
    est.kind = CharFnKind::DiffFUtilde;
    Ok(est)
}

/// Squares an error-scale estimate in place.
pub fn square_to_diff(mut est: CharFnEstimate) -> CharFnEstimate {
    assert_eq!(est.kind, CharFnKind::ErrorFU1);
    for v in &mut est.values {
        *v = *v * *v;
    }
    est.kind = CharFnKind::DiffFUtilde;
    est
}

/// Brute-force ordered double-loop evaluation of the estimator, for use as
/// an independent oracle in tests. Kept free of the fast accumulation
/// machinery on purpose.
pub fn ecf_error_bruteforce(series: &TickSeries, xi: f64, s_grid: &[f64]) -> Vec<f64> {
    let pts = series.grid().points();
    let y = series.values();
    let tol = xi * 1e-12 + 4.0 * f64::EPSILON * series.grid().horizon().abs();
    let mut out = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let mut acc = KahanSum::new();
        let mut count = 0usize;
        for j in 0..pts.len() {
            for l in 0..pts.len() {
                if l != j && (pts[l] - pts[j]).abs() <= xi + tol {
                    acc.add((s * (y[l] - y[j])).cos());
                    count += 1;
                }
            }
        }
        out.push((acc.value() / count as f64).abs().sqrt());
    }
    out
}
