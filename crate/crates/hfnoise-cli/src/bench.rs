//! Monte Carlo benchmark harness.
//!
//! Replicates the estimator studies cell by cell (model x noise family x
//! noise level x sampling frequency), with per-replication child seeds so
//! reports are identical regardless of the parallelism degree. The moment
//! study runs on the unit-rescaled models (`c = 100`); relative deviations
//! are scale free, the rescaling only keeps the raw numbers away from the
//! underflow range.

use hfnoise::bandwidth::{select_h_xi, SelectConfig};
use hfnoise::density::{self, default_x_grid, invert_density, truncate_negative};
use hfnoise::ecf::ecf_error;
use hfnoise::grid::TimeGrid;
use hfnoise::ivol::estimate_iv;
use hfnoise::kernel::{KernelFamily, KernelSpec};
use hfnoise::moments::estimate_moments;
use hfnoise::neighborhood::build_neighborhoods;
use hfnoise::seed::{child_seed, stream_seed};
use hfnoise::sim::{
    generate_noise, make_observations, rescale_model, simulate_heston, HestonParams, NoiseFamily,
    NoiseSpec,
};
use hfnoise::stats;
use hfnoise::EquiGrid;
use hfnoise::{Error, Result, TickSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    I,
    II,
}

impl ModelId {
    pub fn params(&self) -> HestonParams {
        match self {
            ModelId::I => HestonParams::model_i(),
            ModelId::II => HestonParams::model_ii(),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelId::I => write!(f, "i"),
            ModelId::II => write!(f, "ii"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Density,
    Moments,
    Ivol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub models: Vec<ModelId>,
    pub noise_families: Vec<NoiseFamily>,
    pub sigma_us: Vec<f64>,
    pub delta_ss: Vec<u32>,
    pub replications: usize,
    pub master_seed: u64,
    pub kernel: KernelFamily,
    pub estimators: Vec<EstimatorKind>,
    pub substeps: usize,
    /// Unit rescaling applied to the moment cells.
    pub moment_rescale_c: f64,
    pub kmax: usize,
    /// Regression grid size and scan threshold for the volatility cells.
    pub ivol_m: usize,
    pub ivol_threshold: f64,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if self.models.is_empty()
            || self.noise_families.is_empty()
            || self.sigma_us.is_empty()
            || self.delta_ss.is_empty()
            || self.estimators.is_empty()
        {
            return Err(Error::InvalidParameter(
                "models, noise families, sigma_u, delta_s and estimators must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelId::I],
            noise_families: vec![NoiseFamily::Normal],
            sigma_us: vec![0.005],
            delta_ss: vec![30],
            replications: 200,
            master_seed: 20_170_731,
            kernel: KernelFamily::Sinc,
            estimators: vec![
                EstimatorKind::Density,
                EstimatorKind::Moments,
                EstimatorKind::Ivol,
            ],
            substeps: 10,
            moment_rescale_c: 100.0,
            kmax: 2,
            ivol_m: 50,
            ivol_threshold: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCell {
    pub kernel: KernelFamily,
    pub ise: Vec<f64>,
    pub ise_median: f64,
    pub ise_q1: f64,
    pub ise_q3: f64,
    pub h_hat_median: f64,
    pub xi_hat_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCell {
    pub k: Vec<usize>,
    /// Mean over replications of `(Mhat - M)/M`, one entry per `k`.
    pub rel_dev_mean: Vec<f64>,
    pub rel_dev_sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvolCell {
    /// Moments of `(beta_hat - beta)/beta` over replications.
    pub rel_dev_mean: f64,
    pub rel_dev_sd: f64,
    pub abs_rel_dev_median: f64,
    pub rv_rel_dev_mean: f64,
    pub negative_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: ModelId,
    pub noise: NoiseFamily,
    pub sigma_u: f64,
    pub delta_s: u32,
    pub replications: usize,
    pub failures: usize,
    pub n_intervals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ivol: Option<IvolCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchmarkConfig,
    pub cells: Vec<CellReport>,
}

struct RepOutcome {
    ise: Option<f64>,
    h_hat: Option<f64>,
    xi_hat: Option<f64>,
    moment_rel_dev: Option<Vec<f64>>,
    ivol_rel_dev: Option<f64>,
    rv_rel_dev: Option<f64>,
    ivol_negative: bool,
}

fn simulate_series(
    params: &HestonParams,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    substeps: usize,
    seed: u64,
) -> Result<(TickSeries, f64)> {
    let path = simulate_heston(params, grid, substeps, stream_seed(seed, 0))?;
    let noise = generate_noise(spec, path.x.len(), stream_seed(seed, 1));
    let series = make_observations(&path, &noise)?;
    Ok((series, path.integrated_vol))
}

/// One full density replication: bandwidth selection, inversion with the
/// selected `(h, xi)`, tail truncation, ISE against the true error
/// density on the default grid.
pub fn density_replicate(
    params: &HestonParams,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    kernel: KernelFamily,
    substeps: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let (series, _) = simulate_series(params, spec, grid, substeps, seed)?;
    let cfg = SelectConfig {
        kernel,
        seed: stream_seed(seed, 2),
        ..SelectConfig::default()
    };
    let sel = select_h_xi(&series, &cfg)?;
    let est = density_with(&series, kernel, sel.h_hat, sel.xi_hat)?;
    let est = truncate_negative(&est);
    let ise = density::ise(&est, |x| spec.pdf(x));
    Ok((ise, sel.h_hat, sel.xi_hat))
}

/// Deconvolution estimate at explicit `(h, xi)` on the default grid.
pub fn density_with(
    series: &TickSeries,
    kernel: KernelFamily,
    h: f64,
    xi: f64,
) -> Result<density::DensityEstimate> {
    let pilots: Vec<f64> = series
        .first_differences()
        .iter()
        .map(|d| d / std::f64::consts::SQRT_2)
        .collect();
    let x_grid = default_x_grid(&pilots)?;
    let nbhd = build_neighborhoods(series.grid(), xi)?;
    let spec_k = KernelSpec::new(kernel, h)?;
    let s_grid = EquiGrid::from_zero(spec_k.s_support(), 2048).values();
    let cf = ecf_error(series, &nbhd, &s_grid)?;
    invert_density(&cf, spec_k, &x_grid)
}

fn moments_replicate(
    params: &HestonParams,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    kmax: usize,
    substeps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (series, _) = simulate_series(params, spec, grid, substeps, seed)?;
    let xi = grid.t2_minus_t1();
    let nbhd = build_neighborhoods(grid, xi)?;
    let set = estimate_moments(&series, &nbhd, kmax)?;
    let mut rel = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let truth = spec.moment(2 * k).ok_or_else(|| {
            Error::InvalidParameter(format!("moment of order {} does not exist", 2 * k))
        })?;
        rel.push((set.m_u[k - 1] - truth) / truth);
    }
    Ok(rel)
}

fn ivol_replicate(
    params: &HestonParams,
    spec: &NoiseSpec,
    grid: &TimeGrid,
    m: usize,
    threshold: f64,
    substeps: usize,
    seed: u64,
) -> Result<(f64, f64, bool)> {
    let (series, beta) = simulate_series(params, spec, grid, substeps, seed)?;
    let res = estimate_iv(&series, None, m, threshold)?;
    Ok((
        (res.beta_hat - beta) / beta,
        (res.rv_baseline - beta) / beta,
        res.flagged_negative,
    ))
}

/// Runs every configured cell. Replications are distributed with rayon;
/// outcomes are keyed by replication index, so the aggregate does not
/// depend on the worker count.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut cell_idx = 0u64;
    for &delta_s in &cfg.delta_ss {
        let grid = TimeGrid::for_day(delta_s, 0.0, 0)?;
        for &model in &cfg.models {
            for &family in &cfg.noise_families {
                for &sigma_u in &cfg.sigma_us {
                    let report = run_cell(cfg, &grid, model, family, sigma_u, delta_s, cell_idx)?;
                    cells.push(report);
                    cell_idx += 1;
                }
            }
        }
    }
    Ok(BenchReport {
        config: cfg.clone(),
        cells,
    })
}

fn run_cell(
    cfg: &BenchmarkConfig,
    grid: &TimeGrid,
    model: ModelId,
    family: NoiseFamily,
    sigma_u: f64,
    delta_s: u32,
    cell_idx: u64,
) -> Result<CellReport> {
    let params = model.params();
    let spec = NoiseSpec::new(family, sigma_u)?;
    let (params_m, spec_m) = rescale_model(&params, &spec, cfg.moment_rescale_c)?;
    let want = |k: EstimatorKind| cfg.estimators.contains(&k);
    let cell_seed = child_seed(cfg.master_seed, cell_idx);

    let outcomes: Vec<RepOutcome> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = child_seed(cell_seed, rep as u64);
            let mut out = RepOutcome {
                ise: None,
                h_hat: None,
                xi_hat: None,
                moment_rel_dev: None,
                ivol_rel_dev: None,
                rv_rel_dev: None,
                ivol_negative: false,
            };
            if want(EstimatorKind::Density) {
                if let Ok((ise, h, xi)) = density_replicate(
                    &params,
                    &spec,
                    grid,
                    cfg.kernel,
                    cfg.substeps,
                    stream_seed(rep_seed, 10),
                ) {
                    out.ise = Some(ise);
                    out.h_hat = Some(h);
                    out.xi_hat = Some(xi);
                }
            }
            if want(EstimatorKind::Moments) {
                if let Ok(rel) = moments_replicate(
                    &params_m,
                    &spec_m,
                    grid,
                    cfg.kmax,
                    cfg.substeps,
                    stream_seed(rep_seed, 20),
                ) {
                    out.moment_rel_dev = Some(rel);
                }
            }
            if want(EstimatorKind::Ivol) {
                if let Ok((rel, rv_rel, neg)) = ivol_replicate(
                    &params,
                    &spec,
                    grid,
                    cfg.ivol_m,
                    cfg.ivol_threshold,
                    cfg.substeps,
                    stream_seed(rep_seed, 30),
                ) {
                    out.ivol_rel_dev = Some(rel);
                    out.rv_rel_dev = Some(rv_rel);
                    out.ivol_negative = neg;
                }
            }
            out
        })
        .collect();

    let mut failures = 0usize;
    for o in &outcomes {
        let density_failed = want(EstimatorKind::Density) && o.ise.is_none();
        let moments_failed = want(EstimatorKind::Moments) && o.moment_rel_dev.is_none();
        let ivol_failed = want(EstimatorKind::Ivol) && o.ivol_rel_dev.is_none();
        if density_failed || moments_failed || ivol_failed {
            failures += 1;
        }
    }

    let density = if want(EstimatorKind::Density) {
        let ise: Vec<f64> = outcomes.iter().filter_map(|o| o.ise).collect();
        if ise.is_empty() {
            None
        } else {
            let hs: Vec<f64> = outcomes.iter().filter_map(|o| o.h_hat).collect();
            let xis: Vec<f64> = outcomes.iter().filter_map(|o| o.xi_hat).collect();
            Some(DensityCell {
                kernel: cfg.kernel,
                ise_median: stats::median(&ise),
                ise_q1: stats::quantile(&ise, 0.25),
                ise_q3: stats::quantile(&ise, 0.75),
                h_hat_median: stats::median(&hs),
                xi_hat_median: stats::median(&xis),
                ise,
            })
        }
    } else {
        None
    };

    let moments = if want(EstimatorKind::Moments) {
        let rows: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.moment_rel_dev.as_ref()).collect();
        if rows.is_empty() {
            None
        } else {
            let mut mean = Vec::new();
            let mut sd = Vec::new();
            for k in 0..cfg.kmax {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                mean.push(stats::mean(&col));
                sd.push(stats::sample_sd(&col));
            }
            Some(MomentCell {
                k: (1..=cfg.kmax).collect(),
                rel_dev_mean: mean,
                rel_dev_sd: sd,
            })
        }
    } else {
        None
    };

    let ivol = if want(EstimatorKind::Ivol) {
        let rel: Vec<f64> = outcomes.iter().filter_map(|o| o.ivol_rel_dev).collect();
        if rel.is_empty() {
            None
        } else {
            let rv: Vec<f64> = outcomes.iter().filter_map(|o| o.rv_rel_dev).collect();
            let abs: Vec<f64> = rel.iter().map(|v| v.abs()).collect();
            Some(IvolCell {
                rel_dev_mean: stats::mean(&rel),
                rel_dev_sd: stats::sample_sd(&rel),
                abs_rel_dev_median: stats::median(&abs),
                rv_rel_dev_mean: stats::mean(&rv),
                negative_count: outcomes.iter().filter(|o| o.ivol_negative).count(),
            })
        }
    } else {
        None
    };

    Ok(CellReport {
        model,
        noise: family,
        sigma_u,
        delta_s,
        replications: cfg.replications,
        failures,
        n_intervals: grid.n_intervals(),
        density,
        moments,
        ivol,
    })
}

/// Long-format CSV of the report: one row per cell metric.
pub fn report_to_csv(report: &BenchReport) -> String {
    let mut out = String::from("model,noise,sigma_u,delta_s,n,replications,failures,estimator,metric,value\n");
    let mut push = |cell: &CellReport, estimator: &str, metric: &str, value: f64| {
        out.push_str(&format!(
            "{},{:?},{},{},{},{},{},{},{},{:.6e}\n",
            cell.model,
            cell.noise,
            cell.sigma_u,
            cell.delta_s,
            cell.n_intervals,
            cell.replications,
            cell.failures,
            estimator,
            metric,
            value
        ));
    };
    for cell in &report.cells {
        if let Some(d) = &cell.density {
            push(cell, "density", "ise_median", d.ise_median);
            push(cell, "density", "ise_q1", d.ise_q1);
            push(cell, "density", "ise_q3", d.ise_q3);
            push(cell, "density", "h_hat_median", d.h_hat_median);
            push(cell, "density", "xi_hat_median", d.xi_hat_median);
        }
        if let Some(m) = &cell.moments {
            for (i, &k) in m.k.iter().enumerate() {
                push(cell, "moments", &format!("rel_dev_mean_k{k}"), m.rel_dev_mean[i]);
                push(cell, "moments", &format!("rel_dev_sd_k{k}"), m.rel_dev_sd[i]);
            }
        }
        if let Some(v) = &cell.ivol {
            push(cell, "ivol", "rel_dev_mean", v.rel_dev_mean);
            push(cell, "ivol", "rel_dev_sd", v.rel_dev_sd);
            push(cell, "ivol", "abs_rel_dev_median", v.abs_rel_dev_median);
            push(cell, "ivol", "rv_rel_dev_mean", v.rv_rel_dev_mean);
            push(cell, "ivol", "negative_count", v.negative_count as f64);
        }
    }
    out
}

/// Failure-rate gate used for the CLI exit code.
pub fn failure_rate_exceeded(report: &BenchReport, max_share: f64) -> bool {
    report
        .cells
        .iter()
        .any(|c| c.failures as f64 > max_share * c.replications as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_single_replication_all_estimators() {
        let cfg = BenchmarkConfig {
            delta_ss: vec![60],
            replications: 1,
            ..BenchmarkConfig::default()
        };
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert_eq!(cell.failures, 0);
        let d = cell.density.as_ref().unwrap();
        assert!(d.ise_median.is_finite() && d.ise_median >= 0.0);
        let m = cell.moments.as_ref().unwrap();
        assert!(m.rel_dev_mean.iter().all(|v| v.is_finite()));
        let v = cell.ivol.as_ref().unwrap();
        assert!(v.rel_dev_mean.is_finite());
        // realized volatility is noise dominated at this sigma_u
        assert!(v.rv_rel_dev_mean > 3.0);
    }

    #[test]
    fn report_is_deterministic_across_thread_counts() {
        let cfg = BenchmarkConfig {
            delta_ss: vec![120],
            replications: 4,
            estimators: vec![EstimatorKind::Moments, EstimatorKind::Ivol],
            ..BenchmarkConfig::default()
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = pool1.install(|| run_benchmark(&cfg)).unwrap();
        let r4 = pool4.install(|| run_benchmark(&cfg)).unwrap();
        assert_eq!(r1, r4);
    }

    #[test]
    fn csv_rows_cover_each_metric() {
        let cfg = BenchmarkConfig {
            delta_ss: vec![120],
            replications: 2,
            estimators: vec![EstimatorKind::Moments],
            ..BenchmarkConfig::default()
        };
        let report = run_benchmark(&cfg).unwrap();
        let csv = report_to_csv(&report);
        assert!(csv.contains("rel_dev_mean_k1"));
        assert!(csv.contains("rel_dev_sd_k2"));
        assert!(!failure_rate_exceeded(&report, 0.2));
    }
}
