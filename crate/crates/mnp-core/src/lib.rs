//! Solvers for the box-constrained minimum-norm-point problem
//!
//! ```text
//! minimize ½‖Ax − b‖²  subject to  0 ≤ x ≤ u
//! ```
//!
//! with NNLS as the special case of all-infinite upper bounds. The central
//! algorithm alternates a first-order update step (Frank-Wolfe, projected
//! gradient, or a single-coordinate move) with stabilizing minor cycles that
//! project the iterate onto the least-squares solution set of its current
//! bound pattern, clamped back to the box. The solver terminates with an
//! exact KKT point in finitely many cycles.
//!
//! Besides the solver ([`solver::solve`]) the crate ships:
//!
//! - pure first-order baselines with epsilon stopping ([`baselines`]),
//! - random and network-flow instance generators plus a text file format
//!   ([`instance`]),
//! - a ground-truth oracle for small instances: exact optima by partition
//!   enumeration, elementary-vector / circuit-imbalance enumeration, and
//!   checkers for the solver's contraction and proximity guarantees
//!   ([`oracle`]),
//! - a seeded verification suite wiring all of the above together
//!   ([`suite`]).
//!
//! The `parallel` feature (on by default) runs the oracle's enumeration
//! loops on rayon; without it everything is sequential.
//!
//! ```
//! use mnp_core::instance::{generate, Feasibility, GeneratorSpec, Shape};
//! use mnp_core::oracle::brute_force_optimum;
//! use mnp_core::solver::{solve, SolverConfig};
//! use mnp_core::update::UpdateRule;
//!
//! let inst = generate(&GeneratorSpec {
//!     shape: Shape::Rectangular,
//!     m: 3,
//!     n: 6,
//!     capacitated: false,
//!     feasibility: Feasibility::RandomRhs,
//!     seed: 7,
//! })?;
//! let report = solve(&inst, &SolverConfig {
//!     rule: UpdateRule::coordinate(),
//!     ..SolverConfig::default()
//! })?;
//! assert_eq!(report.status, mnp_core::SolveStatus::Optimal);
//!
//! // Small instances can be certified against the enumeration oracle.
//! let cert = brute_force_optimum(&inst)?;
//! assert!((report.objective - cert.p_star).abs() <= 1e-7 * (1.0 + cert.p_star));
//! # Ok::<(), mnp_core::Error>(())
//! ```

// Coordinate indices are the semantic objects throughout the dense kernels;
// index loops read better than enumerate chains there.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod centroid;
pub mod error;
pub mod instance;
pub mod iterate;
pub mod linalg;
pub mod oracle;
mod par;
pub mod solver;
pub mod suite;
pub mod update;

pub use error::{Error, Result};
pub use instance::Instance;
pub use iterate::Iterate;
pub use linalg::Matrix;
pub use solver::{SolveReport, SolveStatus, SolverConfig};
