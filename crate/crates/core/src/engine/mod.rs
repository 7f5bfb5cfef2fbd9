//! The HPR solver: the dual method, its primal baselines, and the shared
//! restart / penalty / termination logic.

mod config;
mod dual;
mod iterate;
mod kkt;
mod merit;
mod primal;
mod restart;
mod sigma;
mod solve;

pub use config::{Sigma0Rule, SolverConfig, Variant};
pub use dual::DualSplitting;
pub use iterate::IterateBundle;
pub use kkt::{kkt_residuals, KktMeasures, KktReport, Status};
pub use merit::{difference, m_norm_sq};
pub use primal::{Primal1Splitting, Primal2Splitting};
pub use restart::{check_restart, RestartDecision, RestartReason, RestartState};
pub use sigma::{golden_section, minimize_sigma, sigma_objective, sigma_update, smooth_sigma};
pub use solve::{
    auto_sigma0, solve, solve_primal_variant, solve_variant, SolveOutput, Splitting, TraceRecord,
};
