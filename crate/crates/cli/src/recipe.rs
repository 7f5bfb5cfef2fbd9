//! Generator recipes: JSON lists of instance families.
//!
//! ```json
//! { "instances": [
//!     { "family": "random", "n": 20, "m": 200, "count": 3, "seed": 0 },
//!     { "family": "lasso", "p": 20, "q": 50, "formulation": "native" },
//!     { "family": "qap", "d": 8 } ] }
//! ```

use hprqp::generators::{gen_qap, gen_random_qp, lasso_native, lasso_to_cqp, LassoInstance};
use hprqp::CcqpProblem;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub instances: Vec<Family>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum LassoForm {
    Cqp,
    Native,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Family {
    Random {
        n: usize,
        m: usize,
        /// Defaults to `2 / n`, which keeps about five nonzeros per row of `Q`.
        density: Option<f64>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
    Lasso {
        p: usize,
        q: usize,
        #[serde(default = "lasso_density")]
        density: f64,
        #[serde(default = "lasso_ratio")]
        lambda_ratio: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        count: usize,
        #[serde(default = "lasso_form")]
        formulation: LassoForm,
    },
    Qap {
        d: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

fn lasso_density() -> f64 {
    0.1
}

fn lasso_ratio() -> f64 {
    1e-3
}

fn lasso_form() -> LassoForm {
    LassoForm::Cqp
}

impl Recipe {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid recipe: {e}")))
    }

    /// Instances in recipe order; copies of a family use consecutive seeds.
    pub fn build(&self) -> Result<Vec<CcqpProblem>, CliError> {
        let mut out = Vec::new();
        for fam in &self.instances {
            match *fam {
                Family::Random {
                    n,
                    m,
                    density,
                    seed,
                    count,
                } => {
                    let density = density.unwrap_or_else(|| (2.0 / n.max(1) as f64).min(1.0));
                    for s in seed..seed + count as u64 {
                        out.push(gen_random_qp(n, m, density, s)?);
                    }
                }
                Family::Lasso {
                    p,
                    q,
                    density,
                    lambda_ratio,
                    seed,
                    count,
                    formulation,
                } => {
                    for s in seed..seed + count as u64 {
                        let inst = LassoInstance::random(p, q, density, lambda_ratio, s)?;
                        let (prob, tag) = match formulation {
                            LassoForm::Cqp => (lasso_to_cqp(&inst)?, "cqp"),
                            LassoForm::Native => (lasso_native(&inst)?, "native"),
                        };
                        out.push(prob.with_name(format!("lasso_{tag}_p{p}_q{q}_s{s}")));
                    }
                }
                Family::Qap { d, seed, count } => {
                    for s in seed..seed + count as u64 {
                        out.push(gen_qap(d, s)?.1);
                    }
                }
            }
        }
        Ok(out)
    }
}
