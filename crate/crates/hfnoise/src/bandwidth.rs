//! Data-driven choice of the smoothing pair `(h, xi)` by two-level
//! simulation extrapolation.
//!
//! The target density cannot be cross-validated directly (there is no
//! noise-free data from it), so two surrogate problems are solved instead.
//! Level 1 averages adjacent observations pairwise, producing differences
//! whose error law is `f_1 = 2 f_U(sqrt2 .) * f_U(sqrt2 .)`; level 2
//! repeats the averaging on blocks of four, producing `f_2` which relates
//! to `f_1` the way `f_1` relates to `f_U`. Each surrogate density has a
//! directly observable pilot sample, so a reference kernel estimate
//! (Gaussian kernel, Sheather-Jones bandwidth) is available, and `(h_k,
//! xi_k)` can be tuned by minimizing the integrated squared error of the
//! deconvolution estimate against that reference. The final bandwidth is
//! the ratio extrapolation `h_hat = h_1^2 / h_2` with `xi_hat = xi_1`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::density::{self, DensityEstimate};
use crate::ecf;
use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::seed::stream_seed;
use crate::sim::TickSeries;
use crate::stats;
use crate::trig::EquiGrid;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Surrogate differences for one lag: `values[j]` spans the time distance
/// `spans[j]` (patterns differ per lag, so each lag carries its own span
/// list).
#[derive(Debug, Clone, PartialEq)]
pub struct LagDeltas {
    pub spans: Vec<f64>,
    pub values: Vec<f64>,
}

/// Differences and pilot samples for one surrogate level.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSeries {
    pub level: u8,
    /// Canonical surrogate time points (the base-pattern `t_j` list).
    pub times: Vec<f64>,
    /// Lag -> difference list.
    pub deltas: BTreeMap<usize, LagDeltas>,
    /// Directly observable pilot samples from the surrogate density.
    pub direct: Vec<f64>,
    horizon: f64,
}

impl SurrogateSeries {
    /// All difference values whose time span is within `xi`.
    pub fn diffs_within(&self, xi: f64) -> Vec<f64> {
        let tol = xi * 1e-12 + 4.0 * f64::EPSILON * self.horizon;
        let mut out = Vec::new();
        for lag in self.deltas.values() {
            for (span, value) in lag.spans.iter().zip(&lag.values) {
                if *span <= xi + tol {
                    out.push(*value);
                }
            }
        }
        out
    }
}

/// Level-1 surrogate: pairwise-averaged observations.
///
/// For lags above one, `t1_j = (t_j + t_{j+1})/2` and
/// `Y1_j = (Y_j + Y_{j+1})/sqrt2`, with differences `Y1_{j+l} - Y1_j`.
/// Lag one instead skips a point, `Y1'_j = (Y_j + Y_{j+2})/sqrt2` at
/// `(t_j + t_{j+2})/2`, so the two summands never share an observation.
/// The direct pilot samples are `(Y_{j+1} - Y_j)/sqrt2`.
pub fn build_delta1(series: &TickSeries, max_lag: usize) -> Result<SurrogateSeries> {
    let n = series.len().saturating_sub(1);
    if n < 3 {
        return Err(Error::SeriesTooShort {
            need: 4,
            got: series.len(),
        });
    }
    let t = series.grid().points();
    let y = series.values();

    let times_a: Vec<f64> = (0..n).map(|j| 0.5 * (t[j] + t[j + 1])).collect();
    let vals_a: Vec<f64> = (0..n).map(|j| (y[j] + y[j + 1]) / SQRT_2).collect();
    let times_b: Vec<f64> = (0..=n - 2).map(|j| 0.5 * (t[j] + t[j + 2])).collect();
    let vals_b: Vec<f64> = (0..=n - 2).map(|j| (y[j] + y[j + 2]) / SQRT_2).collect();

    let mut deltas = BTreeMap::new();
    for lag in 1..=max_lag.min(n - 1) {
        if lag == 1 {
            // pair-skip construction, j = 0..n-3
            if n < 3 {
                continue;
            }
            let count = n - 2;
            let spans = (0..count).map(|j| times_b[j + 1] - times_b[j]).collect();
            let values = (0..count).map(|j| vals_b[j + 1] - vals_b[j]).collect();
            deltas.insert(1, LagDeltas { spans, values });
        } else {
            // j = 0..n-lag-1
            if n < lag + 1 {
                continue;
            }
            let count = n - lag;
            let spans = (0..count).map(|j| times_a[j + lag] - times_a[j]).collect();
            let values = (0..count).map(|j| vals_a[j + lag] - vals_a[j]).collect();
            deltas.insert(lag, LagDeltas { spans, values });
        }
    }

    let direct = (0..n).map(|j| (y[j + 1] - y[j]) / SQRT_2).collect();
    Ok(SurrogateSeries {
        level: 1,
        times: times_a,
        deltas,
        direct,
        horizon: series.grid().horizon(),
    })
}

/// Level-2 surrogate: four-point averages.
///
/// Block averages `sum_{k=0..3} Y_{j+k} / 2` handle lags of four and more;
/// lags one to three use the index patterns `{0,2,4,6}`, `{0,1,4,5}` and
/// `{0,1,2,6}` respectively, chosen so the two endpoints of a difference
/// never share an observation. The direct pilot samples are
/// `(Delta_j - Delta_{k(j)})/sqrt2` with `k(j)` drawn uniformly at random.
pub fn build_delta2(series: &TickSeries, max_lag: usize, seed: u64) -> Result<SurrogateSeries> {
    let n = series.len().saturating_sub(1);
    if n < 9 {
        return Err(Error::SeriesTooShort {
            need: 10,
            got: series.len(),
        });
    }
    let t = series.grid().points();
    let y = series.values();

    let avg4 = |offsets: &[usize], j: usize| -> (f64, f64) {
        let mut ys = 0.0;
        let mut ts = 0.0;
        for &k in offsets {
            ys += y[j + k];
            ts += t[j + k];
        }
        (ts / 4.0, ys / 2.0)
    };

    // Step 1: plain blocks, j = 0..n-3
    let base: Vec<(f64, f64)> = (0..=n - 3).map(|j| avg4(&[0, 1, 2, 3], j)).collect();
    // Step 2 patterns
    let pat1: Vec<(f64, f64)> = (0..=n - 6).map(|j| avg4(&[0, 2, 4, 6], j)).collect();
    let pat2: Vec<(f64, f64)> = (0..=n - 5).map(|j| avg4(&[0, 1, 4, 5], j)).collect();
    let pat3: Vec<(f64, f64)> = (0..=n - 6).map(|j| avg4(&[0, 1, 2, 6], j)).collect();

    let diff_list = |pts: &[(f64, f64)], lag: usize, count: usize| -> LagDeltas {
        let spans = (0..count).map(|j| pts[j + lag].0 - pts[j].0).collect();
        let values = (0..count).map(|j| pts[j + lag].1 - pts[j].1).collect();
        LagDeltas { spans, values }
    };

    let mut deltas = BTreeMap::new();
    for lag in 1..=max_lag.min(n.saturating_sub(3)) {
        match lag {
            1 => deltas.insert(1, diff_list(&pat1, 1, n - 6)),
            2 => deltas.insert(2, diff_list(&pat2, 2, n - 6)),
            3 => {
                if n >= 9 {
                    deltas.insert(3, diff_list(&pat3, 3, n - 8))
                } else {
                    None
                }
            }
            l => {
                // j = 0..n-l-3
                if n >= l + 3 {
                    deltas.insert(l, diff_list(&base, l, n - l - 2))
                } else {
                    None
                }
            }
        };
    }

    let d1: Vec<f64> = (0..n).map(|j| (y[j + 1] - y[j]) / SQRT_2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direct = (0..n)
        .map(|j| {
            let k = rng.gen_range(0..n);
            (d1[j] - d1[k]) / SQRT_2
        })
        .collect();

    Ok(SurrogateSeries {
        level: 2,
        times: base.iter().map(|p| p.0).collect(),
        deltas,
        direct,
        horizon: series.grid().horizon(),
    })
}

/// Sheather-Jones solve-the-equation bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SjBandwidth {
    pub h: f64,
    /// Set when the bracketing failed and the normal-reference rule was
    /// returned instead.
    pub fell_back: bool,
}

const SJ_BINS: usize = 1000;
const DELMAX: f64 = 1000.0;

/// Binned counts of pairwise absolute differences: `cnt[k]` is the number
/// of unordered pairs whose binned distance is `k` bins.
fn pair_counts(data: &[f64], nb: usize) -> (f64, Vec<f64>) {
    let (mut lo, mut hi) = (data[0], data[0]);
    for &x in data {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let width = (hi - lo) * 1.01 / nb as f64;
    let mut hist = vec![0.0f64; nb];
    for &x in data {
        let b = (((x - lo) / width) as usize).min(nb - 1);
        hist[b] += 1.0;
    }
    let mut cnt = vec![0.0f64; nb];
    for i in 0..nb {
        if hist[i] == 0.0 {
            continue;
        }
        cnt[0] += hist[i] * (hist[i] - 1.0) / 2.0;
        for k in 1..nb - i {
            cnt[k] += hist[i] * hist[i + k];
        }
    }
    (width, cnt)
}

fn phi4_functional(n: usize, width: f64, cnt: &[f64], h: f64) -> f64 {
    let mut sum = 0.0;
    for (k, &c) in cnt.iter().enumerate() {
        let u = k as f64 * width / h;
        let d = u * u;
        if d >= DELMAX {
            break;
        }
        sum += c * (-0.5 * d).exp() * (d * d - 6.0 * d + 3.0);
    }
    let total = 2.0 * sum + n as f64 * 3.0;
    total / (n as f64 * (n - 1) as f64 * h.powi(5) * (2.0 * std::f64::consts::PI).sqrt())
}

fn phi6_functional(n: usize, width: f64, cnt: &[f64], h: f64) -> f64 {
    let mut sum = 0.0;
    for (k, &c) in cnt.iter().enumerate() {
        let u = k as f64 * width / h;
        let d = u * u;
        if d >= DELMAX {
            break;
        }
        sum += c * (-0.5 * d).exp() * (d * d * d - 15.0 * d * d + 45.0 * d - 15.0);
    }
    let total = 2.0 * sum - 15.0 * n as f64;
    total / (n as f64 * (n - 1) as f64 * h.powi(7) * (2.0 * std::f64::consts::PI).sqrt())
}

/// Solve-the-equation plug-in bandwidth for a Gaussian kernel estimator.
/// Root-finding is bisection on `[1e-3, 10] x` the normal-reference
/// bandwidth `0.9 min(sd, IQR/1.349) n^{-1/5}`; when no sign change exists
/// in that bracket the normal-reference value is returned flagged.
pub fn sheather_jones(data: &[f64]) -> Result<SjBandwidth> {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in bandwidth data"));
    sorted.dedup();
    if sorted.len() < 16 {
        return Err(Error::InvalidParameter(format!(
            "sheather_jones needs at least 16 distinct values, got {}",
            sorted.len()
        )));
    }
    let n = data.len();
    let scale = stats::robust_scale(data)?;
    let h_nr = 0.9 * scale * (n as f64).powf(-0.2);

    let (width, cnt) = pair_counts(data, SJ_BINS);
    let a = 1.24 * scale * (n as f64).powf(-1.0 / 7.0);
    let b = 1.23 * scale * (n as f64).powf(-1.0 / 9.0);
    let td = -phi6_functional(n, width, &cnt, b);
    let sda = phi4_functional(n, width, &cnt, a);
    if !(td > 0.0) || !(sda > 0.0) {
        return Ok(SjBandwidth {
            h: h_nr,
            fell_back: true,
        });
    }
    let alph2 = 1.357 * (sda / td).powf(1.0 / 7.0);
    let c1 = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * n as f64);
    let f = |h: f64| -> f64 {
        let sd_h = phi4_functional(n, width, &cnt, alph2 * h.powf(5.0 / 7.0));
        if sd_h <= 0.0 {
            return f64::NAN;
        }
        (c1 / sd_h).powf(0.2) - h
    };

    let mut lo = 1e-3 * h_nr;
    let mut hi = 10.0 * h_nr;
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo * fhi > 0.0 {
        return Ok(SjBandwidth {
            h: h_nr,
            fell_back: true,
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if !fm.is_finite() {
            break;
        }
        if fm * flo.signum() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-9 * hi {
            break;
        }
    }
    Ok(SjBandwidth {
        h: 0.5 * (lo + hi),
        fell_back: false,
    })
}

/// Standard Gaussian-kernel density estimate on `x_grid`.
pub fn pilot_kde(data: &[f64], bandwidth: f64, x_grid: &[f64]) -> Result<DensityEstimate> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    let norm = 1.0 / (data.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let values = x_grid
        .iter()
        .map(|&x| {
            let mut acc = stats::KahanSum::new();
            for &xi in data {
                let z = (x - xi) / bandwidth;
                acc.add((-0.5 * z * z).exp());
            }
            norm * acc.value()
        })
        .collect();
    Ok(DensityEstimate {
        x_grid: x_grid.to_vec(),
        values,
        kernel: KernelSpec::new(KernelFamily::Gaussian, bandwidth)?,
        xi: 0.0,
        truncated: false,
    })
}

/// Perturbs tied values by `N(0, a_j^2)` where `2 a_j` is the larger of
/// the distances to the nearest distinct smaller and larger values. Used
/// only on pilot samples fed to the reference bandwidth, never on
/// estimator inputs.
pub fn break_ties(values: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut distinct = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("NaN in break_ties input"));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidParameter(
            "break_ties needs at least 2 distinct values".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = values
        .iter()
        .map(|&v| {
            let pos = distinct.partition_point(|&d| d < v);
            // distinct[pos] == v
            let gap_lo = if pos > 0 { v - distinct[pos - 1] } else { f64::NEG_INFINITY };
            let gap_hi = if pos + 1 < distinct.len() {
                distinct[pos + 1] - v
            } else {
                f64::NEG_INFINITY
            };
            let two_a = gap_lo.max(gap_hi);
            let a = 0.5 * two_a;
            let z: f64 = StandardNormal.sample(&mut rng);
            v + a * z
        })
        .collect();
    Ok(out)
}

/// Configuration of the `(h, xi)` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub kernel: KernelFamily,
    /// Log-spaced bandwidth grid size and span (multiples of the pilot
    /// Sheather-Jones bandwidth).
    pub h_points: usize,
    pub h_span: (f64, f64),
    /// Window grid in multiples of the median grid spacing.
    pub xi_multiples: Vec<f64>,
    /// Shared master frequency grid for the search inversions.
    pub master_points: usize,
    /// Evaluation grid: `x_points` abscissae spanning
    /// `+- x_span_scales` robust scales of the pilot data.
    pub x_points: usize,
    pub x_span_scales: f64,
    /// Spacing ratio beyond which only the quarter of pilot samples with
    /// the smallest spacings feeds the reference estimates.
    pub subset_ratio_trigger: f64,
    /// Perturb tied pilot samples before the reference bandwidth.
    pub tie_break: bool,
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Sinc,
            h_points: 20,
            h_span: (0.1, 10.0),
            xi_multiples: vec![1.0, 2.0, 3.0, 5.0, 8.0],
            master_points: 4096,
            x_points: 512,
            x_span_scales: 6.0,
            subset_ratio_trigger: 1.5,
            tie_break: false,
            seed: 0,
        }
    }
}

/// Outcome of the two-level search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub h1: f64,
    pub xi1: f64,
    pub h2: f64,
    /// Ratio extrapolation `h1^2 / h2`.
    pub h_hat: f64,
    /// Equal to `xi1`.
    pub xi_hat: f64,
    pub h_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    /// Level-1 ISE surface, indexed `[xi][h]`; infeasible cells are NaN.
    pub ise_surface: Vec<Vec<f64>>,
    /// Level-2 ISE curve over the bandwidth grid at `xi1`.
    pub ise_curve2: Vec<f64>,
    pub sj_h1: f64,
    pub sj_h2: f64,
    pub sj_fallback: (bool, bool),
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Deconvolution-vs-reference search over one surrogate level. The
/// characteristic function is evaluated once per `xi` on a master grid
/// covering the widest kernel support; each bandwidth then integrates over
/// the master nodes inside its own support (plus an interpolated
/// endpoint).
fn search_level(
    surr: &SurrogateSeries,
    xi_cands: &[f64],
    h_grid: &[f64],
    kernel: KernelFamily,
    target: &DensityEstimate,
    master_points: usize,
) -> Result<(f64, f64, Vec<Vec<f64>>)> {
    let h_min = h_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_hi = kernel.s_support(h_min);
    let master = EquiGrid::from_zero(s_hi, master_points);
    let master_s = master.values();

    let mut surface = vec![vec![f64::NAN; h_grid.len()]; xi_cands.len()];
    let mut best: Option<(f64, f64, f64)> = None; // (ise, h, xi)

    for (xi_i, &xi) in xi_cands.iter().enumerate() {
        let diffs = surr.diffs_within(xi);
        if diffs.len() < 8 {
            continue;
        }
        let charfn: Vec<f64> = ecf::mean_cos(&diffs, &master_s)
            .into_iter()
            .map(|m| m.abs().sqrt())
            .collect();

        for (h_i, &h) in h_grid.iter().enumerate() {
            let smax = kernel.s_support(h);
            let mut nodes: Vec<(f64, f64)> = Vec::new();
            let last = ((smax / master.step).floor() as usize).min(master_points - 1);
            for k in 0..=last {
                nodes.push((master_s[k], charfn[k]));
            }
            if last + 1 < master_points && master_s[last] < smax * (1.0 - 1e-12) {
                let frac = (smax - master_s[last]) / master.step;
                let phi_end = charfn[last] + frac * (charfn[last + 1] - charfn[last]);
                nodes.push((smax, phi_end));
            }
            if nodes.len() < 2 {
                continue;
            }
            let spec = KernelSpec::new(kernel, h)?;
            let fhat = density::inversion_values(&nodes, spec, &target.x_grid);
            let sq: Vec<f64> = fhat
                .iter()
                .zip(&target.values)
                .map(|(a, b)| (a - b) * (a - b))
                .collect();
            let ise_val = stats::trapezoid(&target.x_grid, &sq);
            surface[xi_i][h_i] = ise_val;
            if best.map_or(true, |(b, _, _)| ise_val < b) {
                best = Some((ise_val, h, xi));
            }
        }
    }

    match best {
        Some((_, h, xi)) => Ok((h, xi, surface)),
        None => Err(Error::EmptyFeasibleGrid),
    }
}

/// Runs the full two-level selection on a series.
pub fn select_h_xi(series: &TickSeries, cfg: &SelectConfig) -> Result<BandwidthSelection> {
    let n = series.len().saturating_sub(1);
    if n < 31 {
        return Err(Error::SeriesTooShort {
            need: 32,
            got: series.len(),
        });
    }
    let grid = series.grid();
    let y = series.values();
    let t = grid.points();

    // level-1 pilot samples and their spacings
    let d1: Vec<f64> = (0..n).map(|j| (y[j + 1] - y[j]) / SQRT_2).collect();
    let spacings: Vec<f64> = (0..n).map(|j| t[j + 1] - t[j]).collect();

    // on widely unequispaced grids only the quarter with the smallest
    // spacings feeds the reference estimates
    let used_idx: Vec<usize> = if grid.max_dt() / grid.min_dt() > cfg.subset_ratio_trigger {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| spacings[a].partial_cmp(&spacings[b]).unwrap());
        let keep = (n / 4).max(17.min(n));
        let mut sel: Vec<usize> = order.into_iter().take(keep).collect();
        sel.sort_unstable();
        sel
    } else {
        (0..n).collect()
    };
    let pilots1: Vec<f64> = used_idx.iter().map(|&j| d1[j]).collect();

    let sj1_input = if cfg.tie_break {
        break_ties(&pilots1, stream_seed(cfg.seed, 1))?
    } else {
        pilots1.clone()
    };
    let sj1 = sheather_jones(&sj1_input)?;
    let x1 = density::mirrored_x_grid(
        cfg.x_span_scales * stats::robust_scale(&pilots1)?,
        cfg.x_points,
    );
    let f1_tilde = pilot_kde(&pilots1, sj1.h, &x1)?;

    let h_grid = log_spaced(cfg.h_span.0 * sj1.h, cfg.h_span.1 * sj1.h, cfg.h_points);
    let med_dt = grid.median_dt();
    let xi_grid: Vec<f64> = cfg.xi_multiples.iter().map(|m| m * med_dt).collect();
    let xi_max = xi_grid.iter().cloned().fold(0.0, f64::max);
    let max_lag = ((xi_max / grid.min_dt()).ceil() as usize + 1).min(n.saturating_sub(3)).max(1);

    let surr1 = build_delta1(series, max_lag)?;
    let (h1, xi1, surface1) = search_level(
        &surr1,
        &xi_grid,
        &h_grid,
        cfg.kernel,
        &f1_tilde,
        cfg.master_points,
    )?;

    let surr2 = build_delta2(series, max_lag, stream_seed(cfg.seed, 2))?;
    let pilots2: Vec<f64> = used_idx.iter().map(|&j| surr2.direct[j]).collect();
    let sj2_input = if cfg.tie_break {
        break_ties(&pilots2, stream_seed(cfg.seed, 3))?
    } else {
        pilots2.clone()
    };
    let sj2 = sheather_jones(&sj2_input)?;
    let x2 = density::mirrored_x_grid(
        cfg.x_span_scales * stats::robust_scale(&pilots2)?,
        cfg.x_points,
    );
    let f2_tilde = pilot_kde(&pilots2, sj2.h, &x2)?;

    let (h2, _, surface2) = search_level(
        &surr2,
        &[xi1],
        &h_grid,
        cfg.kernel,
        &f2_tilde,
        cfg.master_points,
    )?;

    Ok(BandwidthSelection {
        h1,
        xi1,
        h2,
        h_hat: h1 * h1 / h2,
        xi_hat: xi1,
        h_grid,
        xi_grid,
        ise_surface: surface1,
        ise_curve2: surface2.into_iter().next().unwrap(),
        sj_h1: sj1.h,
        sj_h2: sj2.h,
        sj_fallback: (sj1.fell_back, sj2.fell_back),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use approx::assert_relative_eq;

    fn series_from(y: Vec<f64>) -> TickSeries {
        let g = TimeGrid::new((0..y.len()).map(|i| i as f64).collect()).unwrap();
        TickSeries::new(g, y).unwrap()
    }

    #[test]
    fn level1_hand_expansion() {
        let s = series_from(vec![1.0, 4.0, 9.0, 16.0]); // n = 3
        let surr = build_delta1(&s, 3).unwrap();
        // lag 2: (y2 + y3 - y0 - y1)/sqrt2
        let l2 = &surr.deltas[&2];
        assert_eq!(l2.values.len(), 1);
        assert_relative_eq!(l2.values[0], (9.0 + 16.0 - 1.0 - 4.0) / SQRT_2);
        assert_relative_eq!(l2.spans[0], 2.0);
        // lag 1: (y1 + y3 - y0 - y2)/sqrt2
        let l1 = &surr.deltas[&1];
        assert_eq!(l1.values.len(), 1);
        assert_relative_eq!(l1.values[0], (4.0 + 16.0 - 1.0 - 9.0) / SQRT_2);
        assert_relative_eq!(l1.spans[0], 1.0);
        // direct pilots
        assert_eq!(surr.direct.len(), 3);
        assert_relative_eq!(surr.direct[0], 3.0 / SQRT_2);
    }

    #[test]
    fn level1_lengths_match_the_construction_ranges() {
        let n = 40;
        let s = series_from((0..=n).map(|i| (i as f64).sin()).collect());
        let surr = build_delta1(&s, 6).unwrap();
        assert_eq!(surr.deltas[&1].values.len(), n - 2);
        for lag in 2..=6 {
            assert_eq!(surr.deltas[&lag].values.len(), n - lag, "lag {lag}");
        }
        assert_eq!(surr.direct.len(), n);
        assert_eq!(surr.times.len(), n);
    }

    #[test]
    fn level2_hand_expansion() {
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect(); // n = 9
        let s = series_from(y.clone());
        let surr = build_delta2(&s, 6, 7).unwrap();
        let l4 = &surr.deltas[&4];
        let expect = (y[4] + y[5] + y[6] + y[7] - y[0] - y[1] - y[2] - y[3]) / 2.0;
        assert_relative_eq!(l4.values[0], expect);
        assert_relative_eq!(l4.spans[0], 4.0);
        // lag 3 pattern {0,1,2,6}, shift 3
        let l3 = &surr.deltas[&3];
        let expect3 =
            (y[3] + y[4] + y[5] + y[9] - y[0] - y[1] - y[2] - y[6]) / 2.0;
        assert_relative_eq!(l3.values[0], expect3);
        // lag 1 pattern {0,2,4,6}, shift 1
        let l1 = &surr.deltas[&1];
        let expect1 = (y[1] + y[3] + y[5] + y[7] - y[0] - y[2] - y[4] - y[6]) / 2.0;
        assert_relative_eq!(l1.values[0], expect1);
        // lag 2 pattern {0,1,4,5}, shift 2
        let l2 = &surr.deltas[&2];
        let expect2 = (y[2] + y[3] + y[6] + y[7] - y[0] - y[1] - y[4] - y[5]) / 2.0;
        assert_relative_eq!(l2.values[0], expect2);
    }

    #[test]
    fn level2_lengths_match_the_construction_ranges() {
        let n = 50;
        let s = series_from((0..=n).map(|i| (i as f64 * 0.7).cos()).collect());
        let surr = build_delta2(&s, 7, 3).unwrap();
        assert_eq!(surr.deltas[&1].values.len(), n - 6);
        assert_eq!(surr.deltas[&2].values.len(), n - 6);
        assert_eq!(surr.deltas[&3].values.len(), n - 8);
        for lag in 4..=7 {
            assert_eq!(surr.deltas[&lag].values.len(), n - lag - 2, "lag {lag}");
        }
        assert_eq!(surr.direct.len(), n);
    }

    #[test]
    fn constant_series_has_zero_deltas() {
        let s = series_from(vec![2.5; 20]);
        let s1 = build_delta1(&s, 4).unwrap();
        assert!(s1.deltas.values().all(|l| l.values.iter().all(|&v| v == 0.0)));
        let s2 = build_delta2(&s, 5, 1).unwrap();
        assert!(s2.deltas.values().all(|l| l.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn surrogate_determinism_under_seed() {
        let s = series_from((0..=30).map(|i| (i as f64 * 1.1).sin()).collect());
        let a = build_delta2(&s, 5, 42).unwrap();
        let b = build_delta2(&s, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = build_delta2(&s, 5, 43).unwrap();
        assert_ne!(a.direct, c.direct);
    }

    #[test]
    fn sheather_jones_near_reference_on_gaussian_data() {
        let u = crate::sim::generate_noise(
            &crate::sim::NoiseSpec::new(crate::sim::NoiseFamily::Normal, 1.0).unwrap(),
            100_000,
            5,
        );
        let sj = sheather_jones(&u).unwrap();
        assert!(!sj.fell_back);
        // plug-in rules agree on Gaussian data at large n: the sharp
        // reference is the AMISE-optimal (4/3)^(1/5) sd n^(-1/5); the
        // rule-of-thumb 0.9 sd n^(-1/5) sits ~18% below it.
        let sd = stats::sample_sd(&u);
        let amise = (4.0f64 / 3.0).powf(0.2) * sd * (u.len() as f64).powf(-0.2);
        assert!(
            (sj.h / amise - 1.0).abs() < 0.05,
            "h = {}, amise = {amise}",
            sj.h
        );
        let rot = 0.9 * sd * (u.len() as f64).powf(-0.2);
        assert!((sj.h / rot - 1.0).abs() < 0.20, "h = {}, rot = {rot}", sj.h);
    }

    #[test]
    fn sheather_jones_is_scale_equivariant() {
        let u = crate::sim::generate_noise(
            &crate::sim::NoiseSpec::new(crate::sim::NoiseFamily::Normal, 1.0).unwrap(),
            5_000,
            9,
        );
        let h1 = sheather_jones(&u).unwrap().h;
        let scaled: Vec<f64> = u.iter().map(|x| 250.0 * x).collect();
        let h2 = sheather_jones(&scaled).unwrap().h;
        assert_relative_eq!(h2 / h1, 250.0, max_relative = 1e-3);
    }

    #[test]
    fn sheather_jones_rejects_degenerate_data() {
        assert!(sheather_jones(&[1.0; 100]).is_err());
        assert!(sheather_jones(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn pilot_kde_matches_brute_force() {
        let data: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64 / 25.0 - 2.0).collect();
        let h = 0.3;
        let xg: Vec<f64> = (0..41).map(|i| -3.0 + 0.15 * i as f64).collect();
        let est = pilot_kde(&data, h, &xg).unwrap();
        for (k, &x) in xg.iter().enumerate() {
            let mut s = 0.0;
            for &d in &data {
                let z = (x - d) / h;
                s += (-0.5 * z * z).exp();
            }
            s /= data.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt();
            assert!((est.values[k] - s).abs() < 1e-12);
        }
        // single point at zero with unit bandwidth
        let single = pilot_kde(&[0.0], 1.0, &[0.0]).unwrap();
        assert_relative_eq!(single.values[0], 0.3989422804014327, epsilon = 1e-12);
        // unit mass
        let wide: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
        let est = pilot_kde(&data, h, &wide).unwrap();
        assert_relative_eq!(density::mass(&est), 1.0, epsilon = 1e-3);
    }

    /// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
    fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
        let mut sa = a.to_vec();
        let mut sb = b.to_vec();
        sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (mut i, mut j) = (0usize, 0usize);
        let mut d: f64 = 0.0;
        while i < sa.len() && j < sb.len() {
            if sa[i] <= sb[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / sa.len() as f64;
            let fb = j as f64 / sb.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    #[test]
    fn tie_perturbation_preserves_the_coarse_distribution() {
        // tick-structured data: normal draws rounded to a 1e-4 grid, the
        // gap structure of price differences quantized to cents
        let raw = crate::sim::generate_noise(
            &crate::sim::NoiseSpec::new(crate::sim::NoiseFamily::Normal, 0.005 * SQRT_2).unwrap(),
            20_000,
            99,
        );
        let ticked: Vec<f64> = raw.iter().map(|v| (v / 1e-4).round() * 1e-4).collect();
        let perturbed = break_ties(&ticked, 101).unwrap();
        let ks = ks_distance(&ticked, &perturbed);
        assert!(ks <= 0.01, "KS distance {ks}");
    }

    #[test]
    fn selection_is_deterministic_under_fixed_seed() {
        let g = crate::grid::TimeGrid::for_day(120, 0.0, 0).unwrap();
        let params = crate::sim::HestonParams::model_i();
        let spec = crate::sim::NoiseSpec::new(crate::sim::NoiseFamily::Normal, 0.005).unwrap();
        let path = crate::sim::simulate_heston(&params, &g, 5, 1).unwrap();
        let noise = crate::sim::generate_noise(&spec, path.x.len(), 2);
        let series = crate::sim::make_observations(&path, &noise).unwrap();
        let cfg = SelectConfig {
            seed: 33,
            ..SelectConfig::default()
        };
        let a = select_h_xi(&series, &cfg).unwrap();
        let b = select_h_xi(&series, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn break_ties_gap_rule() {
        // uniform gaps: interior a_j = g/2
        let vals = vec![0.0, 1.0, 2.0, 3.0];
        let out = break_ties(&vals, 11).unwrap();
        assert_eq!(out.len(), 4);
        // determinism
        assert_eq!(out, break_ties(&vals, 11).unwrap());
        assert_ne!(out, break_ties(&vals, 12).unwrap());

        // tied zeros in (0,0,1): a = 1/2 for every value
        let vals = vec![0.0, 0.0, 1.0];
        let out = break_ties(&vals, 5).unwrap();
        assert_eq!(out.len(), 3);
        // Monte Carlo check of the dispersion rule: over many seeds the
        // zero perturbations have sd ~ 1/2
        let mut zs = Vec::new();
        for seed in 0..2000 {
            let o = break_ties(&vals, seed).unwrap();
            zs.push(o[0]);
        }
        let sd = stats::sample_sd(&zs);
        assert!((sd - 0.5).abs() < 0.05, "sd {sd}");

        assert!(break_ties(&[1.0, 1.0, 1.0], 0).is_err());
    }
}
