//! Bayesian linear regression with Student-t errors.
//!
//! The crate is organized around five pieces:
//!
//! * [`model`]: the Student density, the full and outlier-limiting log-posteriors
//!   over `(beta, nu = log sigma)` with exact gradients, and the closed-form
//!   properness and robustness condition checks.
//! * [`hmc`]: a Metropolis-adjusted leapfrog HMC sampler and chain summaries.
//! * [`asymptotics`]: the pseudo-true scale ratio `sigma*/sigma0` and the
//!   efficiency factor `phi(gamma)`.
//! * [`ols`]: the normal-model closed forms used as the `gamma = inf` baseline.
//! * [`experiments`]: data simulation, the outlier sweep, the limiting-vs-reduced
//!   comparison, curve tables and their file formats.

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod hmc;
pub mod model;
pub mod ols;
mod special;

pub use error::{Error, Result};
pub use model::{Dataset, Dof, OutlierSpec, Params, PriorSpec};

/// Version string embedded in result file headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
