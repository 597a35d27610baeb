//! Pseudo-spectral solver for the 2-D phase field crystal equation
//! `phi_t = lap[(lap + beta)^2 phi + phi^3 - eps*phi]` on a periodic square,
//! marched by a linear, unconditionally energy-stable, variable-step BDF2
//! scheme with a scalar auxiliary variable, plus the energy-variation
//! adaptive step controller and a convergence/diagnostics harness.

pub mod adaptive;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod rng;
pub mod runner;
pub mod scenarios;
pub mod snapshot;
pub mod spectral;
pub mod testutil;

pub use error::{PfcError, Result};
pub use field::{Field, SpectralCoeffs};
pub use grid::GridSpec;
