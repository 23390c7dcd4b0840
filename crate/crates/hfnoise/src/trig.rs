//! Accumulation of trigonometric sums over equispaced grids.
//!
//! Every estimator in this crate reduces to sums of the form
//! `sum_i w_i cos(p_i * s_k)` (and the matching sine sums) over an
//! equispaced family `s_k = start + k * step`. Evaluating `cos` per
//! `(i, k)` pair is too slow for the Monte Carlo harness, so for large
//! workloads the angles are advanced with an incremental complex rotation
//! per point: one `sin_cos` call per point, then two fused multiplies per
//! grid step. Accumulation stays Kahan-compensated in both paths.
//!
//! Small workloads take the direct `cos` path so that brute-force oracle
//! comparisons agree to near machine precision.

/// Equispaced evaluation grid `start + k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquiGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl EquiGrid {
    /// Grid `0, smax/(len-1), ..., smax` (includes both endpoints).
    pub fn from_zero(smax: f64, len: usize) -> Self {
        assert!(len >= 2 && smax > 0.0);
        Self {
            start: 0.0,
            step: smax / (len - 1) as f64,
            len,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.start + k as f64 * self.step).collect()
    }

    /// Recognizes an equispaced slice (1e-9 relative spacing tolerance).
    pub fn detect(xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        if step == 0.0 {
            return None;
        }
        let tol = step.abs() * 1e-9;
        for (k, &x) in xs.iter().enumerate() {
            if (x - (xs[0] + k as f64 * step)).abs() > tol {
                return None;
            }
        }
        Some(Self {
            start: xs[0],
            step,
            len: xs.len(),
        })
    }
}

/// Work threshold below which the direct `cos` path is used.
const DIRECT_WORK_LIMIT: usize = 1 << 22;

#[inline(always)]
fn kahan_add(acc: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *acc + y;
    *comp = (t - *acc) - y;
    *acc = t;
}

/// `out[k] = sum_i w_i cos(p_i * s_k)` on an equispaced grid.
/// `weights = None` means unit weights.
pub fn weighted_cos_sum(points: &[f64], weights: Option<&[f64]>, grid: &EquiGrid) -> Vec<f64> {
    if let Some(w) = weights {
        assert_eq!(w.len(), points.len());
    }
    if points.len().saturating_mul(grid.len) <= DIRECT_WORK_LIMIT {
        return cos_sum_direct(points, weights, &grid.values());
    }
    rotation_sum(points, weights, grid, false).0
}

/// `(sum_i w_i cos(p_i s_k), sum_i w_i sin(p_i s_k))` on an equispaced grid.
pub fn weighted_exp_sum(
    points: &[f64],
    weights: Option<&[f64]>,
    grid: &EquiGrid,
) -> (Vec<f64>, Vec<f64>) {
    if let Some(w) = weights {
        assert_eq!(w.len(), points.len());
    }
    if points.len().saturating_mul(grid.len) <= DIRECT_WORK_LIMIT {
        let xs = grid.values();
        let mut re = vec![0.0; xs.len()];
        let mut im = vec![0.0; xs.len()];
        let mut re_c = vec![0.0; xs.len()];
        let mut im_c = vec![0.0; xs.len()];
        for (i, &p) in points.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            for (k, &x) in xs.iter().enumerate() {
                let (sn, cs) = (p * x).sin_cos();
                kahan_add(&mut re[k], &mut re_c[k], w * cs);
                kahan_add(&mut im[k], &mut im_c[k], w * sn);
            }
        }
        return (re, im);
    }
    rotation_sum(points, weights, grid, true)
}

/// Direct-evaluation variant for arbitrary (not necessarily equispaced)
/// abscissae.
pub fn cos_sum_direct(points: &[f64], weights: Option<&[f64]>, xs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    let mut comp = vec![0.0; xs.len()];
    for (i, &p) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for (k, &x) in xs.iter().enumerate() {
            kahan_add(&mut out[k], &mut comp[k], w * (p * x).cos());
        }
    }
    out
}

/// Incremental-rotation kernel. Points are processed in blocks of four so
/// the serial rotation chains over `k` interleave and hide FMA latency.
fn rotation_sum(
    points: &[f64],
    weights: Option<&[f64]>,
    grid: &EquiGrid,
    want_sin: bool,
) -> (Vec<f64>, Vec<f64>) {
    let len = grid.len;
    let mut re = vec![0.0; len];
    let mut re_c = vec![0.0; len];
    let mut im = vec![0.0; if want_sin { len } else { 0 }];
    let mut im_c = vec![0.0; if want_sin { len } else { 0 }];

    let mut idx = 0;
    while idx < points.len() {
        let block = (points.len() - idx).min(4);
        let mut cs = [0.0f64; 4];
        let mut sn = [0.0f64; 4];
        let mut rc = [0.0f64; 4];
        let mut rs = [0.0f64; 4];
        let mut w = [0.0f64; 4];
        for b in 0..block {
            let p = points[idx + b];
            let (s0, c0) = (grid.start * p).sin_cos();
            let (s1, c1) = (grid.step * p).sin_cos();
            sn[b] = s0;
            cs[b] = c0;
            rs[b] = s1;
            rc[b] = c1;
            w[b] = weights.map_or(1.0, |w| w[idx + b]);
        }
        // unused lanes keep zero weight and a unit rotation
        for b in block..4 {
            cs[b] = 1.0;
            rc[b] = 1.0;
        }

        for k in 0..len {
            let contrib = w[0] * cs[0] + w[1] * cs[1] + w[2] * cs[2] + w[3] * cs[3];
            kahan_add(&mut re[k], &mut re_c[k], contrib);
            if want_sin {
                let contrib_s = w[0] * sn[0] + w[1] * sn[1] + w[2] * sn[2] + w[3] * sn[3];
                kahan_add(&mut im[k], &mut im_c[k], contrib_s);
            }
            for b in 0..4 {
                let nc = cs[b] * rc[b] - sn[b] * rs[b];
                let ns = sn[b] * rc[b] + cs[b] * rs[b];
                cs[b] = nc;
                sn[b] = ns;
            }
        }
        idx += block;
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(points: &[f64], weights: Option<&[f64]>, xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                points
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| weights.map_or(1.0, |w| w[i]) * (p * x).cos())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn rotation_path_matches_direct_evaluation() {
        // force the rotation path with a workload above the direct limit
        let points: Vec<f64> = (0..3000).map(|i| (i as f64 * 0.37).sin() * 5.0).collect();
        let grid = EquiGrid::from_zero(40.0, 2048);
        assert!(points.len() * grid.len > super::DIRECT_WORK_LIMIT);
        let fast = weighted_cos_sum(&points, None, &grid);
        let slow = reference(&points, None, &grid.values());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-8 * points.len() as f64 / 1000.0, "{a} vs {b}");
        }
    }

    #[test]
    fn exp_sum_matches_component_definitions() {
        let points = [0.5, -1.25, 3.0, 0.0, 2.2];
        let w = [1.0, 0.5, 2.0, 1.5, 0.25];
        let grid = EquiGrid {
            start: 0.4,
            step: 0.4,
            len: 50,
        };
        let (re, im) = weighted_exp_sum(&points, Some(&w), &grid);
        for (k, x) in grid.values().iter().enumerate() {
            let er: f64 = points.iter().zip(&w).map(|(&p, &wi)| wi * (p * x).cos()).sum();
            let ei: f64 = points.iter().zip(&w).map(|(&p, &wi)| wi * (p * x).sin()).sum();
            assert!((re[k] - er).abs() < 1e-12);
            assert!((im[k] - ei).abs() < 1e-12);
        }
    }

    #[test]
    fn equigrid_detection() {
        let g = EquiGrid::from_zero(10.0, 11);
        assert_eq!(EquiGrid::detect(&g.values()), Some(g));
        assert!(EquiGrid::detect(&[0.0, 1.0, 2.5]).is_none());
        let xs: Vec<f64> = (0..100).map(|i| -3.0 + 0.07 * i as f64).collect();
        let d = EquiGrid::detect(&xs).unwrap();
        assert!((d.step - 0.07).abs() < 1e-12);
    }
}
