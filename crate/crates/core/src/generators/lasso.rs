use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, CsrMatrix};
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, LinearOperator, PsdOperator};

/// `min 1/2 ||A x - b||^2 + lambda ||x||_1`
#[derive(Debug, Clone, PartialEq)]
pub struct LassoInstance {
    pub a_hat: CsrMatrix,
    pub b_hat: Vec<f64>,
    pub lambda: f64,
}

impl LassoInstance {
    pub fn new(a_hat: CsrMatrix, b_hat: Vec<f64>, lambda: f64) -> Result<Self> {
        if a_hat.nrows() == 0 || a_hat.ncols() == 0 {
            return Err(Error::InvalidProblem("lasso data must be nonempty".into()));
        }
        if b_hat.len() != a_hat.nrows() {
            return Err(Error::DimensionMismatch {
                context: "lasso right-hand side",
                expected: a_hat.nrows(),
                got: b_hat.len(),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "lasso weight must be positive, got {lambda}"
            )));
        }
        Ok(LassoInstance {
            a_hat,
            b_hat,
            lambda,
        })
    }

    /// Standard normal sparse `A` (`p x q`, given density, at least one entry
    /// per column), `b = A x0 + noise` for a sparse `x0`, and
    /// `lambda = lambda_ratio * ||A^T b||_inf`.
    pub fn random(p: usize, q: usize, density: f64, lambda_ratio: f64, seed: u64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidProblem("lasso needs p, q >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for j in 0..q {
            let forced = rng.random_range(0..p);
            for i in 0..p {
                if i == forced || rng.random::<f64>() < density {
                    trip.push((i, j, rng.sample::<f64, _>(StandardNormal)));
                }
            }
        }
        let a_hat = CsrMatrix::from_triplets(p, q, &trip)?;
        let x0: Vec<f64> = (0..q)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                }
            })
            .collect();
        let mut b_hat = vec![0.0; p];
        a_hat.mul_vec(&x0, &mut b_hat);
        for b in b_hat.iter_mut() {
            *b += 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
        let mut atb = vec![0.0; q];
        a_hat.transpose().mul_vec(&b_hat, &mut atb);
        let scale = norm_inf(&atb);
        let lambda = lambda_ratio * if scale > 0.0 { scale } else { 1.0 };
        Self::new(a_hat, b_hat, lambda)
    }

    pub fn p(&self) -> usize {
        self.a_hat.nrows()
    }

    pub fn q(&self) -> usize {
        self.a_hat.ncols()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.p()];
        self.a_hat.mul_vec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b_hat) {
            *ri -= bi;
        }
        0.5 * dot(&r, &r) + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// `v -> A^T (A v)` without forming the product.
#[derive(Debug, Clone)]
pub struct GramOperator {
    a: CsrMatrix,
    at: CsrMatrix,
}

impl GramOperator {
    pub fn new(a: CsrMatrix) -> Self {
        let at = a.transpose();
        GramOperator { a, at }
    }
}

impl LinearOperator for GramOperator {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; self.a.nrows()];
        self.a.mul_vec(x, &mut tmp);
        self.at.mul_vec(&tmp, out);
    }

    fn label(&self) -> &str {
        "gram"
    }
}

/// The conic reformulation over `(x, s, t)`:
/// `min 1/2 ||s||^2 + lambda <e, t>` s.t. `A x - s = b`, `-t <= x <= t`.
pub fn lasso_to_cqp(inst: &LassoInstance) -> Result<CcqpProblem> {
    let (p, q) = (inst.p(), inst.q());
    let n = 2 * q + p;
    let (s0, t0) = (q, q + p);

    let mut q_diag = vec![0.0; n];
    q_diag[s0..t0].iter_mut().for_each(|v| *v = 1.0);
    let mut c = vec![0.0; n];
    c[t0..].iter_mut().for_each(|v| *v = inst.lambda);

    let mut trip: Vec<(usize, usize, f64)> = inst.a_hat.triplets().collect();
    for i in 0..p {
        trip.push((i, s0 + i, -1.0));
    }
    for j in 0..q {
        trip.push((p + j, j, 1.0));
        trip.push((p + j, t0 + j, -1.0));
        trip.push((p + q + j, j, -1.0));
        trip.push((p + q + j, t0 + j, -1.0));
    }
    let a = CsrMatrix::from_triplets(p + 2 * q, n, &trip)?;
    let mut lower = inst.b_hat.clone();
    let mut upper = inst.b_hat.clone();
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, 2 * q));
    upper.extend(std::iter::repeat_n(0.0, 2 * q));

    CcqpProblem::new(
        PsdOperator::Sparse(CsrMatrix::from_diagonal(&q_diag)),
        a,
        c,
        Bounds::new(lower, upper)?,
        CompositeTerm::free(n),
    )
}

/// The original formulation: `Q = A^T A` (matrix-free), `c = -A^T b`,
/// `phi = lambda ||.||_1`, no linear rows, constant `1/2 ||b||^2`.
pub fn lasso_native(inst: &LassoInstance) -> Result<CcqpProblem> {
    let q = inst.q();
    let mut atb = vec![0.0; q];
    inst.a_hat.transpose().mul_vec(&inst.b_hat, &mut atb);
    let c: Vec<f64> = atb.iter().map(|v| -v).collect();
    Ok(CcqpProblem::new(
        PsdOperator::MatrixFree(std::sync::Arc::new(GramOperator::new(inst.a_hat.clone()))),
        CsrMatrix::zeros(0, q),
        c,
        Bounds::free(0),
        CompositeTerm::weighted_l1(inst.lambda)?,
    )?
    .with_offset(0.5 * dot(&inst.b_hat, &inst.b_hat)))
}
