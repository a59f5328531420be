//! Pseudo-spectral solver for the Smagorinsky turbulence model on a forced,
//! triply periodic box, together with the statistics needed to measure the
//! long-time averaged energy dissipation rate and compare it with the
//! analytic upper bounds `<eps_S> <= C * U^3 / L`.
//!
//! Module map:
//! - [`spectral`]: grid, dual real/spectral fields, differentiation,
//!   Leray projection, dealiasing, quadrature norms, binary snapshots.
//! - [`model`]: Smagorinsky stress divergence and dissipation functionals.
//! - [`integrator`]: integrating-factor RK2 time stepping.
//! - [`forcing`]: divergence-free body forces and their scales `F`, `L`.
//! - [`stats`]: per-step records, windowed time averages, balance diagnostics.
//! - [`bounds`]: the dissipation upper bounds and their consistency checks.
//! - [`cli`]: configuration, run orchestration and the `smagbox` subcommands.

pub mod bounds;
pub mod cli;
mod error;
pub mod forcing;
pub mod integrator;
pub mod model;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
