//! Frequency-domain toolkit for stochastic, discrete-time, linear,
//! constant-coefficient rational-expectations models.
//!
//! The library solves models of the form
//!
//! ```text
//! x_t = A x_{t-1} + Ahat xhat_{1,t} + B u_t
//! u_t = R u_{t-1} + w_t
//! ```
//!
//! where `xhat_{1,t}` is a one-step-ahead forecast of `x_{t+1}` produced by a
//! linear forecasting mechanism that must reproduce itself under the model
//! (model-consistency).  The family of model-consistent solutions is
//! parameterized by the free matrix `Ahat F0` — the immediate effect of shocks
//! on forecasts.  The toolkit computes that general solution in the z-domain,
//! selects unique solutions by stability (pole-zero cancellation) or by
//! least-square forecast errors, realizes forecasting mechanisms as feedback
//! predictors, and simulates the resulting closed-loop systems.
//!
//! Module map:
//!
//! - [`polyalg`] — matrix-polynomial and rational-matrix algebra, polynomial
//!   eigenproblems, properness classification, impulse expansion.
//! - [`realize`] — minimal state-space realization (Ho–Kalman) and simulation.
//! - [`model`] — model records, structural builders, admissibility checks.
//! - [`solver`] — zero-state / zero-input / total solutions, feedback
//!   predictors, Monte-Carlo path simulation, and the general multi-lead/lag
//!   solver.
//! - [`selection`] — stability/determinacy selection, least-square-error
//!   selection, expectation-gain sweeps.

pub mod error;
pub mod model;
pub mod polyalg;
pub mod realize;
pub mod selection;
pub mod solver;
pub mod tol;

pub(crate) mod linalg;

pub use error::{Error, Result};
pub use tol::Tolerances;
