//! Estimation of market-microstructure noise properties from noisy
//! high-frequency observations of a latent diffusion, working in the
//! frequency domain.
//!
//! The observed series is modelled as `Y_{t_j} = X_{t_j} + U_{t_j}` where
//! `X` is a continuous-path diffusion sampled on a dense grid and the
//! `U_{t_j}` are i.i.d. errors with a symmetric density. Because `X` moves
//! very little between nearby time points, differences of close-by
//! observations behave like differences of two independent errors, which
//! opens the door to deconvolution:
//!
//! * [`ecf`] builds the localized empirical characteristic function of the
//!   error from neighborhood pair differences,
//! * [`density`] Fourier-inverts it (sinc or Gaussian damping kernel) into
//!   an error-density estimate,
//! * [`moments`] recovers even error moments through a recursion on
//!   difference moments,
//! * [`ivol`] estimates integrated volatility by a multiscale combination
//!   of lagged characteristic functions and a no-intercept regression,
//! * [`bandwidth`] selects the smoothing parameters `(h, xi)` by a
//!   two-level simulation-extrapolation scheme,
//! * [`sim`] provides the Heston + additive-noise generator used by the
//!   Monte Carlo harness in the companion CLI crate.

pub mod bandwidth;
pub mod density;
pub mod ecf;
pub mod error;
pub mod grid;
pub mod io;
pub mod ivol;
pub mod kernel;
pub mod moments;
pub mod neighborhood;
pub mod seed;
pub mod sim;
pub mod stats;

mod trig;

pub use error::{Error, Result};
pub use trig::EquiGrid;
pub use grid::TimeGrid;
pub use sim::TickSeries;
