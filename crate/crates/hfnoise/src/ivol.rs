//! Multiscale frequency-domain estimator of integrated volatility.
//!
//! The single-lag empirical characteristic function of the increments is
//! dominated by the noise term, whose mean grows like `n`. The multiscale
//! combination
//!
//! ```text
//! G(s) = sum_{m=1}^N a_m phihat^{K_m}(s) + zeta { phihat^{K_1}(s) - phihat^{K_2}(s) }
//! ```
//!
//! with `K_m = m`, `N = floor((n+1)^(1/2))` and two-scale-family weights
//! cancels that term, leaving `Re G(s) ~ -(s^2/2) f_{U~}(s) * beta` where
//! `beta` is the integrated volatility. `beta` is then the slope of a
//! no-intercept regression of `Re G(s_j)` on `-(s_j^2/2) fhat_{U~}(s_j)`
//! over frequencies where the difference characteristic function is still
//! close to one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ecf::{self, CharFnEstimate, CharFnKind};
use crate::error::{Error, Result};
use crate::neighborhood::build_neighborhoods;
use crate::sim::TickSeries;
use crate::stats;
use crate::trig::{weighted_exp_sum, EquiGrid};

/// Multiscale combination weights for a series of `n + 1` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleWeights {
    /// Number of increments (`observations - 1`).
    pub n: usize,
    /// Number of scales, `floor((n+1)^(1/2))`.
    pub big_n: usize,
    /// `a_m = 12 K_m (m - N/2 - 1/2) / {N (N^2 - 1)}` with `K_m = m`.
    pub a: Vec<f64>,
    /// `zeta = K_1 K_2 / {(n+1)(K_2 - K_1)} = 2/(n+1)`.
    pub zeta: f64,
}

impl MultiscaleWeights {
    pub fn new(n: usize) -> Result<Self> {
        let big_n = ((n + 1) as f64).sqrt().floor() as usize;
        if big_n < 3 {
            return Err(Error::SeriesTooShort { need: 10, got: n + 1 });
        }
        let nn = big_n as f64;
        let denom = nn * (nn * nn - 1.0);
        let a = (1..=big_n)
            .map(|m| {
                let mf = m as f64;
                12.0 * mf * (mf - nn / 2.0 - 0.5) / denom
            })
            .collect();
        Ok(Self {
            n,
            big_n,
            a,
            zeta: 2.0 / (n + 1) as f64,
        })
    }
}

/// Lagged empirical sum `phihat^K(s) = K^-1 sum_{l=K}^n exp{i s (Y_l - Y_{l-K})}`.
pub fn phi_hat(series: &TickSeries, lag: usize, s: f64) -> Complex64 {
    let y = series.values();
    let mut re = stats::KahanSum::new();
    let mut im = stats::KahanSum::new();
    for l in lag..y.len() {
        let (sn, cs) = (s * (y[l] - y[l - lag])).sin_cos();
        re.add(cs);
        im.add(sn);
    }
    Complex64::new(re.value(), im.value()) / lag as f64
}

/// `G(s)` at a single frequency.
pub fn multiscale_g(series: &TickSeries, s: f64) -> Result<Complex64> {
    let vals = multiscale_g_grid(
        series,
        &EquiGrid {
            start: s,
            step: 1.0,
            len: 1,
        },
    )?;
    Ok(vals[0])
}

/// `G(s)` over an equispaced frequency grid; one pass per scale.
pub fn multiscale_g_grid(series: &TickSeries, grid: &EquiGrid) -> Result<Vec<Complex64>> {
    let n = series.len().saturating_sub(1);
    let weights = MultiscaleWeights::new(n)?;
    let y = series.values();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len];
    let mut lagged = Vec::with_capacity(y.len());
    for (m, &a_m) in weights.a.iter().enumerate() {
        let lag = m + 1;
        let mut coef = a_m;
        if lag == 1 {
            coef += weights.zeta;
        } else if lag == 2 {
            coef -= weights.zeta;
        }
        lagged.clear();
        lagged.extend(y[lag..].iter().zip(y.iter()).map(|(a, b)| a - b));
        let (re, im) = weighted_exp_sum(&lagged, None, grid);
        let scale = coef / lag as f64;
        for (o, (r, i)) in out.iter_mut().zip(re.iter().zip(&im)) {
            *o += Complex64::new(scale * r, scale * i);
        }
    }
    Ok(out)
}

/// Result of the frequency scan for the regression abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SGridSelection {
    /// `m` equispaced points in `(0, S]`.
    pub points: Vec<f64>,
    /// The selected upper frequency `S`.
    pub s_upper: f64,
    /// Set when the scan fell below the threshold at its first step, in
    /// which case `S` is one scan step (a degenerate but usable grid).
    pub degenerate: bool,
}

/// Scans the difference characteristic function upward from zero and
/// returns `m` equispaced points in `(0, S]`, where `S` is the last
/// scanned frequency with `fhat_{U~}(s) >= threshold` (capped by the scan
/// grid itself).
pub fn select_sgrid(charfn_diff: &CharFnEstimate, m: usize, threshold: f64) -> Result<SGridSelection> {
    if charfn_diff.kind != CharFnKind::DiffFUtilde {
        return Err(Error::InvalidParameter(
            "frequency selection expects the difference-scale estimate".into(),
        ));
    }
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be in (0,1), got {threshold}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let mut s_upper = f64::NAN;
    let mut degenerate = false;
    let scan: Vec<(f64, f64)> = charfn_diff
        .s_grid
        .iter()
        .cloned()
        .zip(charfn_diff.values.iter().cloned())
        .filter(|(s, _)| *s > 0.0)
        .collect();
    if scan.is_empty() {
        return Err(Error::InvalidParameter("scan grid has no positive frequencies".into()));
    }
    for (i, &(s, v)) in scan.iter().enumerate() {
        if v >= threshold {
            s_upper = s;
        } else {
            if i == 0 {
                s_upper = s;
                degenerate = true;
            }
            break;
        }
    }
    let points = (1..=m).map(|j| s_upper * j as f64 / m as f64).collect();
    Ok(SGridSelection {
        points,
        s_upper,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityResult {
    /// Estimated integrated volatility (unclamped; may be negative in
    /// small samples, see `flagged_negative`).
    pub beta_hat: f64,
    /// Regression abscissae `s_1..s_m`.
    pub s_points: Vec<f64>,
    /// Localization window used for `fhat_{U~}`.
    pub xi: f64,
    /// Naive realized volatility `sum (delta Y)^2` on the same data.
    pub rv_baseline: f64,
    /// Upper end of the frequency scan.
    pub s_upper: f64,
    pub degenerate_grid: bool,
    pub flagged_negative: bool,
}

/// Number of scan steps used when searching for the threshold crossing.
const SCAN_STEPS: usize = 4096;

/// Full integrated-volatility estimate.
///
/// `xi` defaults to `t_2 - t_1`; the scan cap is `4 / robust_scale` of the
/// first differences with `4096` scan steps; `m` regression points are
/// placed in `(0, S]` at the `threshold` crossing (default 0.99).
pub fn estimate_iv(
    series: &TickSeries,
    xi: Option<f64>,
    m: usize,
    threshold: f64,
) -> Result<VolatilityResult> {
    if series.len() < 10 {
        return Err(Error::SeriesTooShort {
            need: 10,
            got: series.len(),
        });
    }
    let xi = xi.unwrap_or_else(|| series.grid().t2_minus_t1());
    let nbhd = build_neighborhoods(series.grid(), xi)?;
    if nbhd.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let diffs = nbhd.series_differences(series);

    let first_diffs = series.first_differences();
    let scale = stats::robust_scale(&first_diffs)?;
    let s_cap = 4.0 / scale;
    let step = s_cap / SCAN_STEPS as f64;
    let scan_grid = EquiGrid {
        start: step,
        step,
        len: SCAN_STEPS,
    };
    let scan_values = ecf::mean_cos(&diffs, &scan_grid.values());
    let scan_cf = CharFnEstimate {
        s_grid: scan_grid.values(),
        values: scan_values.into_iter().map(|v| v.abs()).collect(),
        xi,
        kind: CharFnKind::DiffFUtilde,
    };
    let selection = select_sgrid(&scan_cf, m, threshold)?;

    // difference charfn and G on the regression grid (equispaced in (0, S])
    let reg_grid = EquiGrid {
        start: selection.points[0],
        step: selection.points[0],
        len: m,
    };
    let fdiff: Vec<f64> = ecf::mean_cos(&diffs, &selection.points)
        .into_iter()
        .map(|v| v.abs())
        .collect();
    let g = multiscale_g_grid(series, &reg_grid)?;

    let mut sxy = stats::KahanSum::new();
    let mut sxx = stats::KahanSum::new();
    for ((&s, &f), gv) in selection.points.iter().zip(&fdiff).zip(&g) {
        let x = -(s * s) / 2.0 * f;
        sxy.add(x * gv.re);
        sxx.add(x * x);
    }
    if sxx.value() == 0.0 {
        return Err(Error::DegenerateDesign);
    }
    let beta_hat = sxy.value() / sxx.value();

    Ok(VolatilityResult {
        beta_hat,
        s_points: selection.points,
        xi,
        rv_baseline: realized_volatility(series),
        s_upper: selection.s_upper,
        degenerate_grid: selection.degenerate,
        flagged_negative: beta_hat < 0.0,
    })
}

/// Plain sum of squared first differences.
pub fn realized_volatility(series: &TickSeries) -> f64 {
    let mut acc = stats::KahanSum::new();
    for w in series.values().windows(2) {
        let d = w[1] - w[0];
        acc.add(d * d);
    }
    acc.value()
}
