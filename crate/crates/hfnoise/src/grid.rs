//! Observation time grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading year in active days.
pub const DAYS_PER_YEAR: f64 = 252.0;
/// Trading seconds in one 6.5-hour day.
pub const SECONDS_PER_DAY: f64 = 6.5 * 3600.0;
/// One trading day expressed in years.
pub const DAY_IN_YEARS: f64 = 1.0 / DAYS_PER_YEAR;

/// Smallest allowed ratio `min dt / max dt` for simulated grids. Grids
/// produced by the simulator keep spacings comparable; ingested tick data
/// is exempt (gaps between trades can be arbitrarily uneven).
pub const MIN_SPACING_RATIO: f64 = 0.25;

/// Ordered observation times `t_0 < t_1 < ... < t_n` in year units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    /// Wraps raw time points, validating finiteness and strict ordering.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::SeriesTooShort {
                need: 2,
                got: points.len(),
            });
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite time point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "time points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Equispaced or jittered one-day grid with observations every
    /// `delta_s` seconds: `n = floor(6.5 * 3600 / delta_s)` intervals over
    /// `T = 1/252`. With `jitter > 0`, every interior point is displaced by
    /// `uniform(-jitter, jitter) * dt` and the grid re-sorted; the result
    /// must keep `min dt / max dt >= 0.25`.
    pub fn for_day(delta_s: u32, jitter: f64, seed: u64) -> Result<Self> {
        if !(1..=1800).contains(&delta_s) {
            return Err(Error::InvalidParameter(format!(
                "delta_s must be in 1..=1800 seconds, got {delta_s}"
            )));
        }
        if !(0.0..0.5).contains(&jitter) {
            return Err(Error::InvalidParameter(format!(
                "jitter must be in [0, 0.5), got {jitter}"
            )));
        }
        let n = (SECONDS_PER_DAY / delta_s as f64).floor() as usize;
        let dt = DAY_IN_YEARS / n as f64;
        let mut points: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
        if jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in points.iter_mut().take(n).skip(1) {
                *p += rng.gen_range(-jitter..jitter) * dt;
            }
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let grid = Self::new(points)?;
            if grid.spacing_ratio() < MIN_SPACING_RATIO {
                return Err(Error::InvalidParameter(format!(
                    "jittered grid violates spacing ratio: min/max dt = {:.4} < {}",
                    grid.spacing_ratio(),
                    MIN_SPACING_RATIO
                )));
            }
            return Ok(grid);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of intervals `n` (one less than the number of observations).
    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap() - self.points[0]
    }

    /// Spacing of the second interval, `t_2 - t_1`, the conventional
    /// default for the localization window.
    pub fn t2_minus_t1(&self) -> f64 {
        if self.points.len() >= 3 {
            self.points[2] - self.points[1]
        } else {
            self.points[1] - self.points[0]
        }
    }

    pub fn min_dt(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_dt(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn median_dt(&self) -> f64 {
        let dts: Vec<f64> = self.points.windows(2).map(|w| w[1] - w[0]).collect();
        crate::stats::median(&dts)
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.min_dt() / self.max_dt()
    }
}
