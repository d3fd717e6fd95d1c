//! Single-index learning with online SGD and label-reusing update oracles.
//!
//! The crate is organized bottom-up:
//!
//! * [`hermite`]: Hermite expansions, information and generative exponents.
//! * [`model`]: teacher/student single-index models and data generation.
//! * [`oracles`]: online, batch-reuse, alternating and deep-alternating
//!   update rules, and their mixed Hermite coefficients.
//! * [`dynamics`]: simulation of spherical SGD and recovery detection.
//! * [`theory`]: sample-complexity predictions and discrete-time bounds.
//! * [`harness`]: parameter sweeps, boundary fits and result files.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod hermite;
pub mod model;
pub mod oracles;
pub mod poly;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use poly::MonomialPoly;
