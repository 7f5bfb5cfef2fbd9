//! Instance families: random sparse QPs, Lasso in two formulations, and
//! convex QAP relaxations.

mod lasso;
mod qap;
mod random_qp;

pub use lasso::{lasso_native, lasso_to_cqp, GramOperator, LassoInstance};
pub use qap::{assignment_duals, gen_qap, qap_from_matrices, QapInstance, QapOperator};
pub use random_qp::gen_random_qp;
