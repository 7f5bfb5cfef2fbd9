//! Relative KKT measures used for termination.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, CsrMatrix};
use crate::problem::{support_box, CcqpProblem, CompositeTerm};

use super::IterateBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    TimeLimit,
    IterLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "Optimal",
            Status::TimeLimit => "TimeLimit",
            Status::IterLimit => "IterLimit",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Optimal" => Ok(Status::Optimal),
            "TimeLimit" => Ok(Status::TimeLimit),
            "IterLimit" => Ok(Status::IterLimit),
            other => Err(Error::InvalidConfig(format!("unknown status `{other}`"))),
        }
    }
}

/// Residual measures at a candidate point, before a status is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktMeasures {
    pub eta_gap: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Euclidean norms of the four blocks of the natural residual map.
    pub residual_norms: [f64; 4],
}

impl KktMeasures {
    pub fn max_eta(&self) -> f64 {
        self.eta_gap.max(self.eta_p).max(self.eta_d)
    }

    /// NaN measures never meet a tolerance.
    pub fn meets(&self, tol: f64) -> bool {
        self.eta_gap <= tol && self.eta_p <= tol && self.eta_d <= tol
    }

    pub fn into_report(self, status: Status) -> KktReport {
        KktReport {
            eta_gap: self.eta_gap,
            eta_p: self.eta_p,
            eta_d: self.eta_d,
            primal_obj: self.primal_obj,
            dual_obj: self.dual_obj,
            residual_norms: self.residual_norms,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub eta_gap: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub residual_norms: [f64; 4],
    pub status: Status,
}

/// Evaluates the termination measures of `u` against `prob`, both in the
/// problem's own coordinates. `x` is first projected onto the box of `phi` so
/// that `phi(x)` is finite. Only `y`, `w`, `z`, `x` and `qw` of `u` are read;
/// the remaining products are recomputed from the data.
pub fn kkt_residuals(u: &IterateBundle, prob: &CcqpProblem) -> Result<KktMeasures> {
    let at = prob.a.transpose();
    kkt_residuals_with(u, prob, &at)
}

pub(crate) fn kkt_residuals_with(
    u: &IterateBundle,
    prob: &CcqpProblem,
    at: &CsrMatrix,
) -> Result<KktMeasures> {
    let (m, n) = (prob.m(), prob.n());
    for (context, expected, got) in [
        ("residual y", m, u.y.len()),
        ("residual x", n, u.x.len()),
        ("residual z", n, u.z.len()),
        ("residual Qw", n, u.qw.len()),
    ] {
        if expected != got {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
    }

    let x = match &prob.phi {
        CompositeTerm::BoxIndicator(b) => b.project(&u.x),
        CompositeTerm::WeightedL1 { .. } => u.x.clone(),
    };
    let qx = prob.q.apply(&x)?;
    let mut ax = vec![0.0; m];
    prob.a.mul_vec(&x, &mut ax);
    let mut aty = vec![0.0; n];
    at.mul_vec(&u.y, &mut aty);

    let quad = 0.5 * dot(&x, &qx);
    let primal = quad + dot(&prob.c, &x) + prob.phi.value(&x);
    let neg_y: Vec<f64> = u.y.iter().map(|v| -v).collect();
    let neg_z: Vec<f64> = u.z.iter().map(|v| -v).collect();
    let conj = support_box(&prob.rows, &neg_y) + prob.phi.conjugate(&neg_z);
    let dual = -quad - conj;
    let eta_gap = if conj.is_finite() && primal.is_finite() {
        (primal - dual).abs() / (1.0 + primal.abs().max((quad + conj).abs()))
    } else {
        f64::INFINITY
    };

    let proj_ax = prob.rows.project(&ax);
    let viol: Vec<f64> = ax.iter().zip(&proj_ax).map(|(a, p)| a - p).collect();
    let b_inf = norm_inf(&prob.rows.magnitude());
    let eta_p = norm_inf(&viol) / (1.0 + b_inf.max(norm_inf(&ax)));

    let dual_res: Vec<f64> = (0..n)
        .map(|i| -qx[i] + aty[i] + u.z[i] - prob.c[i])
        .collect();
    let eta_d =
        norm_inf(&dual_res) / (1.0 + norm_inf(&prob.c).max(norm_inf(&aty)).max(norm_inf(&qx)));

    let shifted: Vec<f64> = ax.iter().zip(&u.y).map(|(a, y)| a - y).collect();
    let r1: Vec<f64> = ax
        .iter()
        .zip(prob.rows.project(&shifted))
        .map(|(a, p)| a - p)
        .collect();
    let r2: Vec<f64> = u.qw.iter().zip(&qx).map(|(a, b)| a - b).collect();
    let x_minus_z: Vec<f64> = x.iter().zip(&u.z).map(|(a, b)| a - b).collect();
    let r3: Vec<f64> = x
        .iter()
        .zip(prob.phi.prox(1.0, &x_minus_z))
        .map(|(a, p)| a - p)
        .collect();
    let r4: Vec<f64> = (0..n)
        .map(|i| prob.c[i] - aty[i] + u.qw[i] - u.z[i])
        .collect();

    Ok(KktMeasures {
        eta_gap,
        eta_p,
        eta_d,
        primal_obj: primal + prob.offset,
        dual_obj: dual + prob.offset,
        residual_norms: [norm2(&r1), norm2(&r2), norm2(&r3), norm2(&r4)],
    })
}
