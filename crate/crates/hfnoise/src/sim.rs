//! Synthetic data generator: Heston latent paths plus i.i.d. additive
//! measurement error on a [`TimeGrid`].
//!
//! The latent log price follows
//!
//! ```text
//! dX_t = sigma_t dB_t,      d sigma_t^2 = kappa (tau - sigma_t^2) dt + gamma sigma_t dW_t,
//! ```
//!
//! with `E(dB dW) = rho dt` and zero drift. Discretization is
//! Euler-Maruyama on `substeps` sub-intervals per observation interval,
//! with full truncation: the variance state may go negative but only
//! `max(sigma^2, 0)` enters drift, diffusion and the integrated-volatility
//! accumulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Heston model parameters (rates per year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Mean-reversion rate of the variance.
    pub kappa: f64,
    /// Long-run variance level.
    pub tau: f64,
    /// Volatility of volatility.
    pub gamma: f64,
    /// Correlation between the price and variance Brownian motions.
    pub rho: f64,
    /// Initial log price.
    pub x0: f64,
    /// Initial variance.
    pub sigma0_sq: f64,
}

impl HestonParams {
    pub fn new(kappa: f64, tau: f64, gamma: f64, rho: f64, x0: f64, sigma0_sq: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("rho must be in [-1, 1], got {rho}")));
        }
        if !(sigma0_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma0_sq must be >= 0, got {sigma0_sq}"
            )));
        }
        Ok(Self { kappa, tau, gamma, rho, x0, sigma0_sq })
    }

    /// Benchmark model (i): `(kappa, tau, gamma, rho) = (6, 0.16, 0.5, -0.6)`,
    /// `X_0 = log(100)`, variance started at its long-run level.
    pub fn model_i() -> Self {
        Self::new(6.0, 0.16, 0.5, -0.6, 100f64.ln(), 0.16).unwrap()
    }

    /// Benchmark model (ii): `(kappa, tau, gamma, rho) = (4, 0.09, 0.3, -0.75)`.
    pub fn model_ii() -> Self {
        Self::new(4.0, 0.09, 0.3, -0.75, 100f64.ln(), 0.09).unwrap()
    }
}

/// Measurement-error law: centered normal or a scaled Student t(8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Normal,
    /// `sigma_u * T8` where `T8` is a standard t with 8 degrees of freedom
    /// (variance `8/6`, not rescaled to unit variance).
    ScaledT8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub sigma_u: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, sigma_u: f64) -> Result<Self> {
        if !(sigma_u >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_u must be >= 0, got {sigma_u}"
            )));
        }
        Ok(Self { family, sigma_u })
    }

    /// Error density evaluated at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.sigma_u == 0.0 {
            return if x == 0.0 { f64::INFINITY } else { 0.0 };
        }
        let z = x / self.sigma_u;
        match self.family {
            NoiseFamily::Normal => {
                (-0.5 * z * z).exp() / (self.sigma_u * (2.0 * std::f64::consts::PI).sqrt())
            }
            NoiseFamily::ScaledT8 => {
                // t(8) density: Gamma(4.5)/(sqrt(8 pi) Gamma(4)) (1 + z^2/8)^(-4.5)
                // with Gamma(4.5) = 6.5625 sqrt(pi) and Gamma(4) = 6, the
                // sqrt(pi) factors cancel.
                let c = 6.5625 / (6.0 * 8.0f64.sqrt());
                c * (1.0 + z * z / 8.0).powf(-4.5) / self.sigma_u
            }
        }
    }

    /// Exact moment `E U^{2k}`; `None` when the moment does not exist
    /// (t(8) has finite moments only below order 8).
    pub fn moment(&self, two_k: usize) -> Option<f64> {
        assert!(two_k % 2 == 0 && two_k >= 2);
        let s2k = self.sigma_u.powi(two_k as i32);
        match self.family {
            NoiseFamily::Normal => {
                // (2k-1)!! sigma^{2k}
                let mut dfact = 1.0;
                let mut i = two_k as i64 - 1;
                while i > 1 {
                    dfact *= i as f64;
                    i -= 2;
                }
                Some(dfact * s2k)
            }
            NoiseFamily::ScaledT8 => {
                // E T8^{2k} = (2k-1)!! * nu^k / prod_{j=1}^{k} (nu - 2j), nu = 8
                let k = two_k / 2;
                if two_k >= 8 {
                    return None;
                }
                let mut dfact = 1.0;
                let mut i = two_k as i64 - 1;
                while i > 1 {
                    dfact *= i as f64;
                    i -= 2;
                }
                let mut denom = 1.0;
                for j in 1..=k {
                    denom *= 8.0 - 2.0 * j as f64;
                }
                Some(dfact * 8f64.powi(k as i32) / denom * s2k)
            }
        }
    }
}

/// A simulated latent path with its variance trajectory and the
/// integrated volatility accumulated on the simulation sub-mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub integrated_vol: f64,
}

/// Observed noisy series `y_j = x_j + u_j` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    grid: TimeGrid,
    y: Vec<f64>,
}

impl TickSeries {
    pub fn new(grid: TimeGrid, y: Vec<f64>) -> Result<Self> {
        if grid.points().len() != y.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points but {} values supplied",
                grid.points().len(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        Ok(Self { grid, y })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// First differences `y_{j+1} - y_j`.
    pub fn first_differences(&self) -> Vec<f64> {
        self.y.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Euler-Maruyama simulation of the Heston model on `grid` with
/// `substeps` sub-intervals per observation interval.
pub fn simulate_heston(
    params: &HestonParams,
    grid: &TimeGrid,
    substeps: usize,
    seed: u64,
) -> Result<PathSample> {
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = grid.points();
    let mut x = Vec::with_capacity(pts.len());
    let mut sigma_sq = Vec::with_capacity(pts.len());

    let mut xs = params.x0;
    let mut v = params.sigma0_sq;
    let mut iv = crate::stats::KahanSum::new();
    let rho = params.rho;
    let rho_comp = (1.0 - rho * rho).sqrt();

    x.push(xs);
    sigma_sq.push(v.max(0.0));
    for w in pts.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        let sqrt_dt = dt.sqrt();
        for _ in 0..substeps {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let vp = v.max(0.0);
            let sv = vp.sqrt();
            let db = sqrt_dt * z1;
            let dw = rho * db + rho_comp * sqrt_dt * z2;
            xs += sv * db;
            iv.add(vp * dt);
            v += params.kappa * (params.tau - vp) * dt + params.gamma * sv * dw;
        }
        x.push(xs);
        sigma_sq.push(v.max(0.0));
    }

    Ok(PathSample {
        grid: grid.clone(),
        x,
        sigma_sq,
        integrated_vol: iv.value(),
    })
}

/// `count` i.i.d. error draws.
pub fn generate_noise(spec: &NoiseSpec, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.family {
        NoiseFamily::Normal => (0..count)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.sigma_u * z
            })
            .collect(),
        NoiseFamily::ScaledT8 => {
            let t = StudentT::new(8.0).expect("valid dof");
            (0..count).map(|_| spec.sigma_u * t.sample(&mut rng)).collect()
        }
    }
}

/// Adds noise to a latent path.
pub fn make_observations(path: &PathSample, noise: &[f64]) -> Result<TickSeries> {
    if noise.len() != path.x.len() {
        return Err(Error::InvalidParameter(format!(
            "path has {} points but {} noise values supplied",
            path.x.len(),
            noise.len()
        )));
    }
    let y = path.x.iter().zip(noise).map(|(a, b)| a + b).collect();
    TickSeries::new(path.grid.clone(), y)
}

/// Unit rescaling `(tau, gamma, sigma_u^2, X_0) -> (c^2 tau, c gamma, c^2 sigma_u^2, c X_0)`.
/// The initial variance scales with `tau` (it is a variance), so with
/// shared random draws the rescaled observations are `c` times the
/// original ones.
pub fn rescale_model(params: &HestonParams, spec: &NoiseSpec, c: f64) -> Result<(HestonParams, NoiseSpec)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    let p = HestonParams::new(
        params.kappa,
        c * c * params.tau,
        c * params.gamma,
        params.rho,
        c * params.x0,
        c * c * params.sigma0_sq,
    )?;
    let s = NoiseSpec::new(spec.family, c * spec.sigma_u)?;
    Ok((p, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::stats;

    fn day_grid(delta_s: u32) -> TimeGrid {
        TimeGrid::for_day(delta_s, 0.0, 0).unwrap()
    }

    #[test]
    fn constant_variance_integrates_exactly() {
        let p = HestonParams::new(6.0, 0.04, 0.0, 0.0, 0.0, 0.04).unwrap();
        let g = day_grid(30);
        let path = simulate_heston(&p, &g, 10, 1).unwrap();
        assert_relative_eq!(path.integrated_vol, 0.04 / 252.0, max_relative = 1e-10);
        assert!(path.sigma_sq.iter().all(|&v| v == 0.04));
    }

    #[test]
    fn model_i_produces_positive_variance_path() {
        let p = HestonParams::model_i();
        let g = day_grid(30);
        let path = simulate_heston(&p, &g, 10, 3).unwrap();
        assert_eq!(path.x.len(), 781);
        assert!(path.sigma_sq.iter().all(|&v| v > 0.0));
        assert!(path.integrated_vol > 0.0);
    }

    #[test]
    fn terminal_variance_matches_time_changed_brownian_motion() {
        // gamma small: var(X_T - X_0) ~ tau * T
        let p = HestonParams::new(6.0, 0.16, 0.05, -0.6, 0.0, 0.16).unwrap();
        let g = day_grid(300); // short grid keeps this cheap
        let mut incs = Vec::with_capacity(4000);
        for r in 0..4000u64 {
            let path = simulate_heston(&p, &g, 5, crate::seed::child_seed(7, r)).unwrap();
            incs.push(path.x.last().unwrap() - path.x[0]);
        }
        let v = stats::sample_variance(&incs);
        assert_relative_eq!(v, 0.16 / 252.0, max_relative = 0.05);
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = HestonParams::model_ii();
        let g = day_grid(60);
        let a = simulate_heston(&p, &g, 10, 5).unwrap();
        let b = simulate_heston(&p, &g, 10, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_variance_and_kurtosis_match_the_law() {
        let spec = NoiseSpec::new(NoiseFamily::Normal, 0.005).unwrap();
        let u = generate_noise(&spec, 100_000, 11);
        let v = stats::sample_variance(&u);
        let se = 2.5e-5 * (2.0 / 1e5f64).sqrt();
        assert!((v - 2.5e-5).abs() < 3.0 * se, "var {v}");

        let spec_t = NoiseSpec::new(NoiseFamily::ScaledT8, 0.005).unwrap();
        let u = generate_noise(&spec_t, 100_000, 12);
        let m = stats::mean(&u);
        let v = stats::sample_variance(&u);
        let m4 = u.iter().map(|x| (x - m).powi(4)).sum::<f64>() / u.len() as f64;
        let kurt = m4 / (v * v);
        // t(8) kurtosis is 4.5; the sampling spread of the kurtosis
        // statistic is wide for heavy tails, so allow a generous band.
        assert!((kurt - 4.5).abs() < 0.6, "kurtosis {kurt}");

        let zero = generate_noise(&NoiseSpec::new(NoiseFamily::Normal, 0.0).unwrap(), 100, 1);
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn observations_add_elementwise() {
        let g = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let path = PathSample {
            grid: g.clone(),
            x: vec![1.0, 2.0],
            sigma_sq: vec![0.0, 0.0],
            integrated_vol: 0.0,
        };
        let s = make_observations(&path, &[0.1, -0.1]).unwrap();
        assert_eq!(s.values(), &[1.1, 1.9]);
        assert!(make_observations(&path, &[0.1]).is_err());
    }

    #[test]
    fn rescaling_matches_the_unit_change() {
        let p = HestonParams::model_i();
        let s = NoiseSpec::new(NoiseFamily::Normal, 0.005).unwrap();
        let (p1, s1) = rescale_model(&p, &s, 1.0).unwrap();
        assert_eq!(p1, p);
        assert_eq!(s1, s);

        let (p100, s100) = rescale_model(&p, &s, 100.0).unwrap();
        assert_relative_eq!(p100.tau, 1600.0);
        assert_relative_eq!(p100.gamma, 50.0);
        assert_relative_eq!(p100.x0, 100.0 * 100f64.ln());
        assert_relative_eq!(s100.sigma_u, 0.5);
    }

    #[test]
    fn rescaled_paths_are_scaled_copies_under_shared_seed() {
        let p = HestonParams::model_i();
        let s = NoiseSpec::new(NoiseFamily::Normal, 0.005).unwrap();
        let (p2, s2) = rescale_model(&p, &s, 100.0).unwrap();
        let g = day_grid(120);
        let a = simulate_heston(&p, &g, 4, 7).unwrap();
        let b = simulate_heston(&p2, &g, 4, 7).unwrap();
        for (xa, xb) in a.x.iter().zip(&b.x) {
            assert_relative_eq!(100.0 * xa, *xb, max_relative = 1e-12);
        }
        let ua = generate_noise(&s, 10, 9);
        let ub = generate_noise(&s2, 10, 9);
        for (a, b) in ua.iter().zip(&ub) {
            assert_relative_eq!(100.0 * a, *b, max_relative = 1e-12);
        }
        // increments of the observed series scale by c as well
        let ya = make_observations(&a, &generate_noise(&s, a.x.len(), 13)).unwrap();
        let yb = make_observations(&b, &generate_noise(&s2, b.x.len(), 13)).unwrap();
        // increments cancel most of the shared level, so compare them on
        // an absolute floor set by the value magnitude
        let floor = 1e-12 * yb.values().iter().cloned().fold(0.0, f64::max);
        let da = ya.first_differences();
        let db = yb.first_differences();
        for (a, b) in da.iter().zip(&db) {
            assert!((100.0 * a - b).abs() < floor, "{a} {b}");
        }
    }

    #[test]
    fn noise_moments_and_pdf_are_consistent() {
        let s = NoiseSpec::new(NoiseFamily::Normal, 2.0).unwrap();
        assert_relative_eq!(s.moment(2).unwrap(), 4.0);
        assert_relative_eq!(s.moment(4).unwrap(), 48.0);
        let t = NoiseSpec::new(NoiseFamily::ScaledT8, 1.0).unwrap();
        assert_relative_eq!(t.moment(2).unwrap(), 8.0 / 6.0);
        assert_relative_eq!(t.moment(4).unwrap(), 8.0);
        assert_eq!(t.moment(8), None);

        // pdf integrates to one (grid wide enough for the t tails)
        let xs: Vec<f64> = (0..=32_000).map(|i| -80.0 + i as f64 * 0.005).collect();
        for spec in [s, t] {
            let ys: Vec<f64> = xs.iter().map(|&x| spec.pdf(x)).collect();
            let mass = crate::stats::trapezoid(&xs, &ys);
            assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
        }
    }
}
