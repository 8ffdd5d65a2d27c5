//! Nonlinear model-order reduction for parametrized hyperbolic conservation
//! laws: shifted-snapshot approximation spaces, residual minimization, and
//! online-adaptive reduced-mesh hyper-reduction with per-step cost
//! proportional to the reduced-mesh size.

pub mod bench;
pub mod config;
pub mod error;
pub mod fv;
pub mod grid;
pub mod hyper;
pub mod io;
pub mod rom;
pub mod sampling;
pub mod shifts;

pub use error::{Error, Result};
