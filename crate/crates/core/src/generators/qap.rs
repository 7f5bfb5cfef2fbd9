use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, LinearOperator, PsdOperator};

/// Data of a convex QAP relaxation `min <vec X, Q vec X>/2` over doubly
/// stochastic `X`, with `Q(X) = A X B - S X - X T`.
#[derive(Debug, Clone)]
pub struct QapInstance {
    pub d: usize,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    /// Eigenvalues of `A`, descending.
    pub alpha: Vec<f64>,
    /// Eigenvalues of `B`, ascending.
    pub beta: Vec<f64>,
    pub v_a: DMatrix<f64>,
    pub v_b: DMatrix<f64>,
    pub s_bar: Vec<f64>,
    pub t_bar: Vec<f64>,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

impl QapInstance {
    /// Largest violation of `s_i + t_j <= alpha_i beta_j`, or zero.
    pub fn dual_infeasibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                worst = worst.max(self.s_bar[i] + self.t_bar[j] - self.alpha[i] * self.beta[j]);
            }
        }
        worst
    }

    /// `|<e, s + t> - sum_i alpha_i beta_i|`
    pub fn dual_gap(&self) -> f64 {
        let dual: f64 = self.s_bar.iter().chain(&self.t_bar).sum();
        let primal: f64 = self.alpha.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        (dual - primal).abs()
    }

    pub fn operator(&self) -> QapOperator {
        QapOperator {
            a_hat: self.a_hat.clone(),
            b_hat: self.b_hat.clone(),
            s: self.s.clone(),
            t: self.t.clone(),
        }
    }

    /// Dense `B (x) A - I (x) S - T (x) I` acting on column-major `vec X`.
    pub fn dense_q(&self) -> DMatrix<f64> {
        let d = self.d;
        let eye = DMatrix::<f64>::identity(d, d);
        self.b_hat.kronecker(&self.a_hat) - eye.kronecker(&self.s) - self.t.kronecker(&eye)
    }
}

/// Optimal duals of `min sum x_ij alpha_i beta_j` over doubly stochastic `x`
/// when `alpha` is descending and `beta` ascending. The identity assignment is
/// optimal; the duals follow from complementary slackness on the diagonal and
/// the first subdiagonal.
pub fn assignment_duals(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = alpha.len();
    let mut s = vec![0.0; d];
    let mut t = vec![0.0; d];
    if d == 0 {
        return (s, t);
    }
    s[0] = alpha[0] * beta[0];
    for i in 1..d {
        s[i] = alpha[i] * beta[i - 1] - t[i - 1];
        t[i] = alpha[i] * beta[i] - s[i];
    }
    (s, t)
}

fn sorted_eigen(
    m: &DMatrix<f64>,
    name: &str,
    descending: bool,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = m.nrows();
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Eigen(format!("{name} is not symmetric")));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("{name}: iteration did not converge")))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen(format!("{name}: non-finite eigenvalue")));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if descending {
        order.reverse();
    }
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Builds the relaxation from given symmetric `A` and `B`.
pub fn qap_from_matrices(
    a_hat: DMatrix<f64>,
    b_hat: DMatrix<f64>,
) -> Result<(QapInstance, CcqpProblem)> {
    let d = a_hat.nrows();
    if d < 2 || a_hat.ncols() != d || b_hat.nrows() != d || b_hat.ncols() != d {
        return Err(Error::InvalidProblem(format!(
            "QAP needs two square matrices of equal size >= 2, got {}x{} and {}x{}",
            a_hat.nrows(),
            a_hat.ncols(),
            b_hat.nrows(),
            b_hat.ncols()
        )));
    }
    let (alpha, v_a) = sorted_eigen(&a_hat, "A", true)?;
    let (beta, v_b) = sorted_eigen(&b_hat, "B", false)?;
    let (s_bar, t_bar) = assignment_duals(&alpha, &beta);
    let s = &v_a * DMatrix::from_diagonal(&DVector::from_column_slice(&s_bar)) * v_a.transpose();
    let t = &v_b * DMatrix::from_diagonal(&DVector::from_column_slice(&t_bar)) * v_b.transpose();
    // symmetrize away rounding so the operator is exactly self-adjoint
    let s = (&s + s.transpose()) * 0.5;
    let t = (&t + t.transpose()) * 0.5;
    let inst = QapInstance {
        d,
        a_hat,
        b_hat,
        alpha,
        beta,
        v_a,
        v_b,
        s_bar,
        t_bar,
        s,
        t,
    };

    let n = d * d;
    let mut trip = Vec::with_capacity(2 * n);
    for j in 0..d {
        for i in 0..d {
            let k = i + d * j;
            trip.push((i, k, 1.0));
            trip.push((d + j, k, 1.0));
        }
    }
    let a = CsrMatrix::from_triplets(2 * d, n, &trip)?;
    let prob = CcqpProblem::new(
        PsdOperator::MatrixFree(std::sync::Arc::new(inst.operator())),
        a,
        vec![0.0; n],
        Bounds::equal(vec![1.0; 2 * d]),
        CompositeTerm::BoxIndicator(Bounds::nonnegative(n)),
    )?
    .with_name(format!("qap_d{d}"));
    Ok((inst, prob))
}

/// Random instance: `A_ij` are distances between uniform points in the unit
/// square; `B` is symmetric with uniform `[0, 1)` entries and zero diagonal.
pub fn gen_qap(d: usize, seed: u64) -> Result<(QapInstance, CcqpProblem)> {
    if d < 2 {
        return Err(Error::InvalidProblem(format!(
            "QAP size must be >= 2, got {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..d).map(|_| (rng.random(), rng.random())).collect();
    let a_hat = DMatrix::from_fn(d, d, |i, j| {
        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
        dx.hypot(dy)
    });
    let mut b_hat = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let v: f64 = rng.random();
            b_hat[(i, j)] = v;
            b_hat[(j, i)] = v;
        }
    }
    let (inst, prob) = qap_from_matrices(a_hat, b_hat)?;
    Ok((inst, prob.with_name(format!("qap_d{d}_s{seed}"))))
}

/// `vec X -> vec(A X B - S X - X T)` with column-major `vec`.
#[derive(Debug, Clone)]
pub struct QapOperator {
    a_hat: DMatrix<f64>,
    b_hat: DMatrix<f64>,
    s: DMatrix<f64>,
    t: DMatrix<f64>,
}

impl LinearOperator for QapOperator {
    fn dim(&self) -> usize {
        self.a_hat.nrows() * self.a_hat.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.a_hat.nrows();
        let xm = DMatrix::from_column_slice(d, d, x);
        let y = &self.a_hat * &xm * &self.b_hat - &self.s * &xm - &xm * &self.t;
        out.copy_from_slice(y.as_slice());
    }

    fn label(&self) -> &str {
        "qap"
    }
}
