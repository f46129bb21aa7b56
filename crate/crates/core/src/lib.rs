//! LMO-based stochastic optimization with momentum.
//!
//! Implements linear-minimization-oracle (norm-ball) optimizers with five
//! momentum engines: Polyak, extrapolated (IGT), momentum variance reduction
//! (MVR/STORM/MARS), and two Hessian-corrected second-order variants.
//! Ships with benchmark problems (logistic regression and a small MLP, both
//! with a nonconvex Welsch penalty), parameter schedules, a deterministic
//! run harness with CSV tracing, and an independent verification suite.

pub mod error;
pub mod momentum;
pub mod norms;
pub mod problems;
pub mod runner;
pub mod schedules;
pub mod verify;

pub use error::Error;

/// Flat parameter vector; every iterate, gradient, and momentum lives here.
pub type ParamVector = ndarray::Array1<f64>;

pub type Result<T> = std::result::Result<T, Error>;
