//! Damping kernels for the Fourier inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Fourier transform is the indicator of `[-1, 1]`.
    Sinc,
    /// Standard normal kernel, `K^ft(s) = exp(-s^2/2)`.
    Gaussian,
}

impl KernelFamily {
    /// Fourier transform of the kernel at `u`.
    pub fn kft(&self, u: f64) -> f64 {
        match self {
            KernelFamily::Sinc => {
                if u.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => (-0.5 * u * u).exp(),
        }
    }

    /// Frequency beyond which `K^ft(s h)` is negligible: `1/h` for the
    /// sinc cutoff, `8/h` for the Gaussian (where the transform has
    /// decayed below 1.3e-14).
    pub fn s_support(&self, h: f64) -> f64 {
        match self {
            KernelFamily::Sinc => 1.0 / h,
            KernelFamily::Gaussian => 8.0 / h,
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::Sinc => write!(f, "sinc"),
            KernelFamily::Gaussian => write!(f, "gaussian"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be > 0, got {bandwidth}"
            )));
        }
        Ok(Self { family, bandwidth })
    }

    /// `K^ft(s h)`.
    pub fn damping(&self, s: f64) -> f64 {
        self.family.kft(s * self.bandwidth)
    }

    pub fn s_support(&self) -> f64 {
        self.family.s_support(self.bandwidth)
    }
}
