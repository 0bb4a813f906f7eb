//! Optimal trade execution under nonlinear transient market impact.
//!
//! The crate discretizes the propagator cost functional on a uniform grid and
//! offers several ways to find stationary or minimal-cost schedules:
//! a homotopy-series solver ([`dham`]), a fixed-point iteration ([`dang`]),
//! a first-order perturbative expansion ([`perturbative`]), multistart
//! quasi-Newton minimization and a monotone pattern search ([`numopt`]).
//! [`landscape`] classifies and summarizes the extrema found by multistart runs.

pub mod cost;
pub mod dang;
pub mod dham;
pub mod error;
pub mod impact;
pub mod kernel;
pub mod landscape;
pub mod numopt;
pub mod perturbative;
pub mod problem;
pub mod reference;
pub mod report;
pub mod series;

pub use cost::{build_f_matrix, spread_coefficient, toy_cost, urysohn_residual, CostModel};
pub use error::{Error, Result};
pub use impact::ImpactModel;
pub use dang::{dang_solve, DangConfig};
pub use dham::{dham_solve, DhamConfig};
pub use kernel::{gss_strategy, vwap_cost_closed_form, vwap_strategy, GridSpec, KernelMatrices, Strategy};
pub use landscape::{Classification, LandscapeReport};
pub use numopt::{local_minimize, monotone_minimize_gss, multistart_minimize, OptimizerOptions};
pub use perturbative::perturbative_solve;
pub use problem::{ProblemSpec, Regularization, SolverSpec};
pub use report::{SolverKind, SolverReport, Termination};
