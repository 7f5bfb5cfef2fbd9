//! Problem data for
//!
//! ```text
//!     minimize    1/2 <x, Q x> + <c, x> + phi(x)
//!     subject to  A x in K = [l, u]
//! ```
//!
//! where `Q` is self-adjoint positive semidefinite (explicit or matrix-free)
//! and `phi` is either the indicator of a box `[L, U]` or `lambda * ||x||_1`.
//! Infinite bounds are IEEE infinities.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// A self-adjoint linear map `R^n -> R^n` given only by its action.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = Q x`. Must be deterministic.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn label(&self) -> &str {
        "matrix-free"
    }
}

#[derive(Clone)]
pub enum PsdOperator {
    Sparse(CsrMatrix),
    MatrixFree(Arc<dyn LinearOperator>),
}

impl fmt::Debug for PsdOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsdOperator::Sparse(m) => f
                .debug_struct("Sparse")
                .field("dim", &m.nrows())
                .field("nnz", &m.nnz())
                .finish(),
            PsdOperator::MatrixFree(op) => f
                .debug_struct("MatrixFree")
                .field("dim", &op.dim())
                .field("label", &op.label())
                .finish(),
        }
    }
}

impl PsdOperator {
    pub fn zero(n: usize) -> Self {
        PsdOperator::Sparse(CsrMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        match self {
            PsdOperator::Sparse(m) => m.nrows(),
            PsdOperator::MatrixFree(op) => op.dim(),
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, PsdOperator::Sparse(_))
    }

    /// True only when the operator is known to vanish (an explicit matrix
    /// without nonzero entries). Matrix-free operators are never assumed zero.
    pub fn is_zero(&self) -> bool {
        match self {
            PsdOperator::Sparse(m) => m.triplets().all(|(_, _, v)| v == 0.0),
            PsdOperator::MatrixFree(_) => false,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            PsdOperator::Sparse(_) => "sparse",
            PsdOperator::MatrixFree(op) => op.label(),
        }
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            PsdOperator::Sparse(m) => m.mul_vec(v, out),
            PsdOperator::MatrixFree(op) => op.apply(v, out),
        }
    }

    /// Returns `Q v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                context: "apply_Q",
                expected: n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

/// Componentwise interval `[lower, upper]` with possibly infinite ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Bounds { lower, upper };
        b.validate("bounds")?;
        Ok(b)
    }

    pub fn free(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn equal(values: Vec<f64>) -> Self {
        Bounds {
            lower: values.clone(),
            upper: values,
        }
    }

    pub fn nonnegative(n: usize) -> Self {
        Bounds {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::InvalidProblem(format!(
                "{what}: lower has {} entries, upper has {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidProblem(format!(
                    "{what}: entry {i} has invalid interval [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    pub fn project_into(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..v.len() {
            out[i] = v[i].max(self.lower[i]).min(self.upper[i]);
        }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.project_into(v, &mut out);
        out
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&l, &u))| l <= x && x <= u)
    }

    /// `max(|l_i|, |u_i|)` with infinite entries replaced by zero.
    pub fn magnitude(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| finite_or_zero(l).abs().max(finite_or_zero(u).abs()))
            .collect()
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// The nonsmooth part `phi` of the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum CompositeTerm {
    BoxIndicator(Bounds),
    WeightedL1 { lambda: f64 },
}

impl CompositeTerm {
    pub fn free(n: usize) -> Self {
        CompositeTerm::BoxIndicator(Bounds::free(n))
    }

    pub fn weighted_l1(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "l1 weight must be positive and finite, got {lambda}"
            )));
        }
        Ok(CompositeTerm::WeightedL1 { lambda })
    }

    /// `Prox_{sigma phi}(r)` written into `out`.
    pub fn prox_into(&self, sigma: f64, r: &[f64], out: &mut [f64]) {
        match self {
            CompositeTerm::BoxIndicator(b) => b.project_into(r, out),
            CompositeTerm::WeightedL1 { lambda } => {
                let thr = sigma * lambda;
                for (o, &v) in out.iter_mut().zip(r) {
                    *o = soft_threshold(v, thr);
                }
            }
        }
    }

    pub fn prox(&self, sigma: f64, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        self.prox_into(sigma, r, &mut out);
        out
    }

    /// `phi(x)`; `+inf` outside the box.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            CompositeTerm::BoxIndicator(b) => {
                if b.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            CompositeTerm::WeightedL1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// The convex conjugate `phi^*(v)`.
    pub fn conjugate(&self, v: &[f64]) -> f64 {
        match self {
            CompositeTerm::BoxIndicator(b) => support_box(b, v),
            CompositeTerm::WeightedL1 { lambda } => {
                if v.iter().all(|x| x.abs() <= *lambda) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

pub fn soft_threshold(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

/// Support function `sup_{s in K} <s, y>`. Products `0 * inf` count as zero.
pub fn support_box(k: &Bounds, y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((&yi, &l), &u) in y.iter().zip(&k.lower).zip(&k.upper) {
        if yi > 0.0 {
            if u == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += u * yi;
        } else if yi < 0.0 {
            if l == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            acc += l * yi;
        }
    }
    acc
}

pub fn prox_phi(term: &CompositeTerm, sigma: f64, r: &[f64]) -> Vec<f64> {
    term.prox(sigma, r)
}

pub fn conj_phi(term: &CompositeTerm, v: &[f64]) -> f64 {
    term.conjugate(v)
}

#[derive(Debug, Clone)]
pub struct CcqpProblem {
    pub name: String,
    pub q: PsdOperator,
    pub a: CsrMatrix,
    pub c: Vec<f64>,
    /// The set `K` for `A x`.
    pub rows: Bounds,
    pub phi: CompositeTerm,
    /// Constant added to reported objective values.
    pub offset: f64,
}

impl CcqpProblem {
    pub fn new(
        q: PsdOperator,
        a: CsrMatrix,
        c: Vec<f64>,
        rows: Bounds,
        phi: CompositeTerm,
    ) -> Result<Self> {
        let p = CcqpProblem {
            name: String::new(),
            q,
            a,
            c,
            rows,
            phi,
            offset: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let dim_err = |context, expected, got| Error::DimensionMismatch {
            context,
            expected,
            got,
        };
        if self.q.dim() != n {
            return Err(dim_err("Q dimension", n, self.q.dim()));
        }
        if self.a.ncols() != n {
            return Err(dim_err("columns of A", n, self.a.ncols()));
        }
        if self.rows.len() != self.a.nrows() {
            return Err(dim_err("row bounds", self.a.nrows(), self.rows.len()));
        }
        self.rows.validate("row bounds")?;
        match &self.phi {
            CompositeTerm::BoxIndicator(b) => {
                if b.len() != n {
                    return Err(dim_err("variable bounds", n, b.len()));
                }
                b.validate("variable bounds")?;
            }
            CompositeTerm::WeightedL1 { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidProblem(format!(
                        "l1 weight must be positive and finite, got {lambda}"
                    )));
                }
            }
        }
        if !self.c.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidProblem("c has non-finite entries".into()));
        }
        if let PsdOperator::Sparse(q) = &self.q {
            if !q.is_symmetric(1e-12) {
                return Err(Error::InvalidProblem("Q is not symmetric".into()));
            }
        }
        Ok(())
    }

    /// `1/2 <x, Qx> + <c, x> + phi(x) + offset`
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let qx = self.q.apply(x)?;
        Ok(0.5 * crate::linalg::dot(x, &qx)
            + crate::linalg::dot(&self.c, x)
            + self.phi.value(x)
            + self.offset)
    }
}
