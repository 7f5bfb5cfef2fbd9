//! A first-order solver for convex composite quadratic programs
//!
//! ```text
//!     minimize    1/2 <x, Q x> + <c, x> + phi(x)
//!     subject to  A x in [l, u]
//! ```
//!
//! based on a Halpern Peaceman-Rachford method applied to the restricted Wolfe
//! dual, with symmetric Gauss-Seidel decoupling, adaptive restarts and penalty
//! updates. Also contains instance generators, QPS / Matrix Market readers and
//! benchmark aggregation.

pub mod bench;
pub mod engine;
pub mod error;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod scaling;
pub mod spectral;

pub use engine::{solve, IterateBundle, KktReport, SolveOutput, SolverConfig, Status, Variant};
pub use error::{Error, Result};
pub use linalg::CsrMatrix;
pub use problem::{Bounds, CcqpProblem, CompositeTerm, LinearOperator, PsdOperator};
