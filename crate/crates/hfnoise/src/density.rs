//! Fourier inversion of the damped characteristic-function estimate into
//! an error-density estimate.
//!
//! The inversion integral
//!
//! ```text
//! fhat(x) = (2 pi)^-1  Int exp(-i s x) fhat_{U,1}(s) K^ft(s h) ds
//! ```
//!
//! has a real, even integrand, so it is computed as
//! `pi^-1 Int_0^smax cos(s x) fhat(s) K^ft(s h) ds` by trapezoidal
//! quadrature on the nonnegative part of the estimate's own frequency
//! grid. The kernel band-limits the integrand, which makes the trapezoid
//! rule spectrally accurate on smooth inputs.

use serde::{Deserialize, Serialize};

use crate::ecf::{CharFnEstimate, CharFnKind};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::stats;
use crate::trig::{cos_sum_direct, weighted_cos_sum, EquiGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kernel: KernelSpec,
    pub xi: f64,
    pub truncated: bool,
}

/// A mirror-symmetric abscissa grid of `count` points (count even): the
/// positive half sits at `(j + 1/2) * (span / (count/2))` and the negative
/// half is its exact reflection, so even functions evaluate symmetrically
/// bit-for-bit and the spacing is uniform across the center.
pub fn mirrored_x_grid(span: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && count % 2 == 0 && span > 0.0);
    let half = count / 2;
    let step = span / half as f64;
    let pos: Vec<f64> = (0..half).map(|j| (j as f64 + 0.5) * step).collect();
    let mut grid: Vec<f64> = pos.iter().rev().map(|&x| -x).collect();
    grid.extend(&pos);
    grid
}

/// Default evaluation grid: 512 points spanning +-6 robust scales of the
/// pilot difference data.
pub fn default_x_grid(pilot: &[f64]) -> Result<Vec<f64>> {
    let scale = stats::robust_scale(pilot)?;
    Ok(mirrored_x_grid(6.0 * scale, 512))
}

fn mirror_halves(x_grid: &[f64]) -> Option<usize> {
    let n = x_grid.len();
    if n % 2 != 0 {
        return None;
    }
    let half = n / 2;
    for i in 0..half {
        if x_grid[i] != -x_grid[n - 1 - i] {
            return None;
        }
    }
    Some(half)
}

/// Inverts `fhat_{U,1}` with the given kernel on `x_grid`.
///
/// The frequency grid must cover the kernel support (`1/h` for sinc,
/// `8/h` for Gaussian). Output is untruncated: negative lobes from the
/// inversion are kept.
pub fn invert_density(
    charfn: &CharFnEstimate,
    kernel: KernelSpec,
    x_grid: &[f64],
) -> Result<DensityEstimate> {
    if charfn.kind != CharFnKind::ErrorFU1 {
        return Err(Error::InvalidParameter(
            "inversion expects the error-scale (fhat_{U,1}) estimate".into(),
        ));
    }
    let need = kernel.s_support();
    let got = charfn.s_max();
    if got < need * (1.0 - 1e-9) {
        return Err(Error::FrequencyCoverage { need, got });
    }

    // nonnegative, ascending part of the frequency grid up to the support
    let mut nodes: Vec<(f64, f64)> = charfn
        .s_grid
        .iter()
        .zip(&charfn.values)
        .filter(|(s, _)| **s >= 0.0 && **s <= need * (1.0 + 1e-12))
        .map(|(s, v)| (*s, *v))
        .collect();
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    nodes.dedup_by(|a, b| a.0 == b.0);
    if nodes.len() < 2 {
        return Err(Error::InvalidParameter(
            "frequency grid has fewer than two usable nodes".into(),
        ));
    }

    let values = inversion_values(&nodes, kernel, x_grid);
    Ok(DensityEstimate {
        x_grid: x_grid.to_vec(),
        values,
        kernel,
        xi: charfn.xi,
        truncated: false,
    })
}

/// Trapezoid inversion of `(s, phi(s))` nodes; shared with the bandwidth
/// search which prepares its own node sets.
pub(crate) fn inversion_values(
    nodes: &[(f64, f64)],
    kernel: KernelSpec,
    x_grid: &[f64],
) -> Vec<f64> {
    let m = nodes.len();
    let inv_pi = 1.0 / std::f64::consts::PI;
    // trapezoid weights on the (possibly nonuniform) node spacing
    let mut coeff = Vec::with_capacity(m);
    let mut s_nodes = Vec::with_capacity(m);
    for (i, &(s, phi)) in nodes.iter().enumerate() {
        let w_left = if i > 0 { nodes[i].0 - nodes[i - 1].0 } else { 0.0 };
        let w_right = if i + 1 < m { nodes[i + 1].0 - nodes[i].0 } else { 0.0 };
        let w = 0.5 * (w_left + w_right);
        s_nodes.push(s);
        coeff.push(inv_pi * w * phi * kernel.damping(s));
    }

    if let Some(half) = mirror_halves(x_grid) {
        let pos = &x_grid[half..];
        let vals = match EquiGrid::detect(pos) {
            Some(grid) => weighted_cos_sum(&s_nodes, Some(&coeff), &grid),
            None => cos_sum_direct(&s_nodes, Some(&coeff), pos),
        };
        let mut out: Vec<f64> = vals.iter().rev().cloned().collect();
        out.extend(&vals);
        out
    } else {
        match EquiGrid::detect(x_grid) {
            Some(grid) => weighted_cos_sum(&s_nodes, Some(&coeff), &grid),
            None => cos_sum_direct(&s_nodes, Some(&coeff), x_grid),
        }
    }
}

/// Clamps negative lobes to zero (no renormalization) and flags the
/// estimate as truncated.
pub fn truncate_negative(est: &DensityEstimate) -> DensityEstimate {
    let mut out = est.clone();
    for v in &mut out.values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out.truncated = true;
    out
}

/// Integrated squared error of an estimate against a reference density,
/// by trapezoid on the estimate's grid.
pub fn ise(est: &DensityEstimate, truth: impl Fn(f64) -> f64) -> f64 {
    let sq: Vec<f64> = est
        .x_grid
        .iter()
        .zip(&est.values)
        .map(|(&x, &v)| {
            let d = v - truth(x);
            d * d
        })
        .collect();
    stats::trapezoid(&est.x_grid, &sq)
}

/// Mass of the estimate on its grid.
pub fn mass(est: &DensityEstimate) -> f64 {
    stats::trapezoid(&est.x_grid, &est.values)
}
