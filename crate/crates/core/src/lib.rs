//! Periodic and asymptotically periodic solutions of two-dimensional
//! nonlinear Volterra difference systems with infinite delay
//!
//! ```text
//! Δx_n = h_n x_n + Σ_{i=-∞}^{n} a_{n,i} f(y_i)
//! Δy_n = p_n y_n + Σ_{i=-∞}^{n} b_{n,i} g(x_i)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`sequences`] – periodic sequences, initial histories and trajectories.
//! * [`kernels`] – the weight families `a_{n,i}`, `b_{n,i}` with closed-form
//!   row sums, double tails and certified truncated sums.
//! * [`system`] – the problem statement, its nonlinearities, and checkers for
//!   the hypotheses of the existence theorems.
//! * [`config`] – the JSON scenario format.
//! * [`simulate`] – forward iteration and residuals of the recurrence.
//! * [`periodic_solver`] – the period-cyclic fixed-point operator and its solver.
//! * [`asymptotic_solver`] – the tail operator and the `x = u + v` decomposition.
//! * [`verify`] – independent certification of candidate solutions.

pub mod asymptotic_solver;
pub mod config;
pub mod error;
pub mod kernels;
mod linalg;
pub mod periodic_solver;
pub mod sequences;
pub mod simulate;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{Kernel, TruncationPolicy};
pub use sequences::{History, PeriodicSequence, TailRule, Trajectory};
pub use system::{Nonlinearity, NonlinearityKind, SystemSpec};

/// Tolerance separating "full-period product equals one" from "differs from one".
pub const PRODUCT_ONE_TOL: f64 = 1e-9;
