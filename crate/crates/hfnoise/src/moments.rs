//! Even-moment estimation of the noise from neighborhood differences.
//!
//! `Mtilde_{2k}` are the empirical `2k`-th moments of the pair
//! differences; the moments of the error itself follow from the
//! convolution identity for symmetric laws,
//!
//! ```text
//! M_{U,2k} = (Mtilde_{2k} - sum_{j=1}^{k-1} C(2k,2j) M_{U,2j} M_{U,2k-2j}) / 2 ,
//! ```
//!
//! applied recursively with `M_{U,2} = Mtilde_2 / 2` at the base. Higher
//! recovered moments can come out negative in small samples; they are
//! passed through unclamped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodIndex;
use crate::sim::TickSeries;
use crate::stats::KahanSum;

pub const KMAX: usize = 8;

/// Difference moments and recovered error moments for `k = 1..=kmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub xi: f64,
    /// `Mtilde_{2k}`, k = 1.. (index 0 is k = 1).
    pub m_tilde: Vec<f64>,
    /// `M_{U,2k}`, same indexing.
    pub m_u: Vec<f64>,
}

/// Exact binomial coefficient as f64 (arguments stay small here).
fn binomial(n: usize, k: usize) -> f64 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k.min(n - k) {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

/// Empirical `2k`-th moments of the neighborhood differences,
/// `k = 1..=kmax`, in one pass with compensated accumulation.
pub fn mtilde_moments(
    series: &TickSeries,
    nbhd: &NeighborhoodIndex,
    kmax: usize,
) -> Result<Vec<f64>> {
    if kmax == 0 || kmax > KMAX {
        return Err(Error::InvalidParameter(format!(
            "kmax must be in 1..={KMAX}, got {kmax}"
        )));
    }
    if nbhd.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let diffs = nbhd.series_differences(series);
    let mut acc: Vec<KahanSum> = vec![KahanSum::new(); kmax];
    for &d in &diffs {
        let d2 = d * d;
        let mut p = 1.0;
        for a in acc.iter_mut() {
            p *= d2;
            a.add(p);
        }
    }
    let n = diffs.len() as f64;
    Ok(acc.into_iter().map(|a| a.value() / n).collect())
}

/// Recovers `M_{U,2k}` from `Mtilde_{2k}` by the convolution recursion.
pub fn recover_moments(m_tilde: &[f64]) -> Vec<f64> {
    assert!(!m_tilde.is_empty() && m_tilde.len() <= KMAX);
    let mut m_u = Vec::with_capacity(m_tilde.len());
    m_u.push(m_tilde[0] / 2.0);
    for k in 2..=m_tilde.len() {
        let mut cross = 0.0;
        for j in 1..k {
            cross += binomial(2 * k, 2 * j) * m_u[j - 1] * m_u[k - j - 1];
        }
        m_u.push(0.5 * (m_tilde[k - 1] - cross));
    }
    m_u
}

/// Forward map: even moments of `U` to even moments of the difference of
/// two independent copies, `Mtilde_{2k} = sum_{j=0}^k C(2k,2j) M_{2j} M_{2k-2j}`
/// with `M_0 = 1`. Inverse of [`recover_moments`].
pub fn convolve_moments(m_u: &[f64]) -> Vec<f64> {
    let get = |j: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            m_u[j - 1]
        }
    };
    (1..=m_u.len())
        .map(|k| {
            (0..=k)
                .map(|j| binomial(2 * k, 2 * j) * get(j) * get(k - j))
                .sum()
        })
        .collect()
}

/// Full pipeline: difference moments plus recovered error moments.
pub fn estimate_moments(
    series: &TickSeries,
    nbhd: &NeighborhoodIndex,
    kmax: usize,
) -> Result<MomentSet> {
    let m_tilde = mtilde_moments(series, nbhd, kmax)?;
    let m_u = recover_moments(&m_tilde);
    Ok(MomentSet {
        xi: nbhd.xi(),
        m_tilde,
        m_u,
    })
}
