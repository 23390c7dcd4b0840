//! Small numeric helpers shared across the estimators.

use crate::error::{Error, Result};

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of a slice.
pub fn ksum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    ksum(xs) / xs.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut acc = KahanSum::new();
    for &x in xs {
        let d = x - m;
        acc.add(d * d);
    }
    acc.value() / (n - 1) as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Linear-interpolation quantile (R type 7) of unsorted data.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p));
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + frac * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Robust scale: min(sample sd, IQR/1.349), falling back to the sd when the
/// IQR is degenerate (heavily tied data). Errors when the data has no
/// dispersion at all.
pub fn robust_scale(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "robust_scale needs at least 2 values".into(),
        ));
    }
    let sd = sample_sd(xs);
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::ZeroScale);
    }
    let iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
    let robust = iqr / 1.349;
    Ok(if robust > 0.0 { sd.min(robust) } else { sd })
}

/// Trapezoid integral of samples `ys` over abscissae `xs` (ascending, not
/// necessarily uniform).
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut acc = KahanSum::new();
    for i in 1..xs.len() {
        acc.add(0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]));
    }
    acc.value()
}
