//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use hprqp::engine::IterateBundle;
use hprqp::spectral::SpectralEstimates;
use hprqp::{Bounds, CcqpProblem, CompositeTerm, CsrMatrix, PsdOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn to_csr(m: &DMatrix<f64>) -> CsrMatrix {
    let values: Vec<f64> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect();
    CsrMatrix::from_dense(m.nrows(), m.ncols(), &values)
}

pub fn to_dense(m: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), &m.to_dense())
}

pub fn vec_of(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// `G G^T` with `G` of size `n x rank`, so exactly rank-deficient when `rank < n`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let g = gaussian(rng, n, rank);
    let q = &g * g.transpose();
    (&q + q.transpose()) * 0.5
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigen().eigenvalues.max()
}

pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .pseudo_inverse(1e-10)
        .expect("svd of a finite matrix")
}

/// Exact spectral bounds inflated by `safety`.
pub fn exact_estimates(a: &DMatrix<f64>, q: &DMatrix<f64>, safety: f64) -> SpectralEstimates {
    SpectralEstimates {
        lambda_a: safety * lambda_max(&(a * a.transpose())),
        lambda_q: safety * lambda_max(q),
        iterations_a: 0,
        iterations_q: 0,
    }
}

pub fn box_project(v: &DVector<f64>, lo: &[f64], hi: &[f64]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn bundle(y: &DVector<f64>, w: &DVector<f64>, x: &DVector<f64>) -> IterateBundle {
    IterateBundle {
        y: y.as_slice().to_vec(),
        w: w.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        ..IterateBundle::zeros(y.len(), x.len())
    }
}

/// A problem built around a chosen primal-dual pair, so its optimal value is
/// known exactly.
pub struct Planted {
    pub prob: CcqpProblem,
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub objective: f64,
}

fn width(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.5..2.0)
}

/// Far side of an active constraint: finite or infinite at random.
fn far(rng: &mut ChaCha8Rng, at: f64, sign: f64) -> f64 {
    if rng.random_bool(0.5) {
        at + sign * width(rng)
    } else {
        sign * f64::INFINITY
    }
}

/// Rows mix equalities, active lower and upper bounds and inactive ranges;
/// variables mix active bounds, strict interiors and free entries. `c` is
/// chosen so that `(x, y, z)` satisfies the KKT system.
pub fn planted_qp(rng: &mut ChaCha8Rng, n: usize, m: usize, q_rank: usize) -> Planted {
    let q = random_psd(rng, n, q_rank);
    let mut a = gaussian(rng, m, n);
    a.iter_mut().for_each(|v| {
        if rng.random_bool(0.3) {
            *v = 0.0;
        }
    });
    let x = gaussian_vec(rng, n);
    let ax = &a * &x;

    let mut y = DVector::zeros(m);
    let (mut rl, mut ru) = (vec![0.0; m], vec![0.0; m]);
    for i in 0..m {
        let s = ax[i];
        let mag = rng.random_range(0.1..2.0);
        match rng.random_range(0..4) {
            0 => {
                y[i] = if rng.random_bool(0.5) { mag } else { -mag };
                rl[i] = s;
                ru[i] = s;
            }
            1 => {
                y[i] = mag;
                rl[i] = s;
                ru[i] = far(rng, s, 1.0);
            }
            2 => {
                y[i] = -mag;
                ru[i] = s;
                rl[i] = far(rng, s, -1.0);
            }
            _ => {
                rl[i] = far(rng, s, -1.0);
                ru[i] = far(rng, s, 1.0);
            }
        }
    }

    let mut z = DVector::zeros(n);
    let (mut xl, mut xu) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let v = x[j];
        let mag = rng.random_range(0.1..2.0);
        match rng.random_range(0..4) {
            0 => {
                z[j] = mag;
                xl[j] = v;
                xu[j] = far(rng, v, 1.0);
            }
            1 => {
                z[j] = -mag;
                xu[j] = v;
                xl[j] = far(rng, v, -1.0);
            }
            2 => {
                xl[j] = far(rng, v, -1.0);
                xu[j] = far(rng, v, 1.0);
            }
            _ => {
                xl[j] = f64::NEG_INFINITY;
                xu[j] = f64::INFINITY;
            }
        }
    }

    let c = a.transpose() * &y + &z - &q * &x;
    let objective = 0.5 * x.dot(&(&q * &x)) + c.dot(&x);
    let prob = CcqpProblem::new(
        PsdOperator::Sparse(to_csr(&q)),
        to_csr(&a),
        c.as_slice().to_vec(),
        Bounds::new(rl, ru).unwrap(),
        CompositeTerm::BoxIndicator(Bounds::new(xl, xu).unwrap()),
    )
    .unwrap();
    Planted {
        prob,
        q,
        a,
        x,
        y,
        z,
        objective,
    }
}

/// The metric `M` on `(y, w, z, x)` assembled block by block, with the sGS
/// correction evaluated through a pseudoinverse.
pub fn dense_metric(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    sigma: f64,
    lambda_a: f64,
    lambda_q: f64,
) -> DMatrix<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut a_q = DMatrix::zeros(n, m + n);
    a_q.view_mut((0, 0), (n, m)).copy_from(&a.transpose());
    a_q.view_mut((0, m), (n, n)).copy_from(&(-q));

    let s_y = DMatrix::identity(m, m) * lambda_a - a * a.transpose();
    let s_w = q * (DMatrix::identity(n, n) * lambda_q - q);
    let inner = q * q * sigma + q + &s_w * sigma;
    let sgs = a * q * pinv(&inner) * q * a.transpose() * (sigma * sigma);

    let mut top = a_q.transpose() * &a_q * sigma;
    {
        let mut yy = top.view_mut((0, 0), (m, m));
        yy += &s_y * sigma + sgs;
    }
    {
        let mut ww = top.view_mut((m, m), (n, n));
        ww += &s_w * sigma;
    }

    let dim = m + 3 * n;
    let xo = m + 2 * n;
    let mut big = DMatrix::zeros(dim, dim);
    big.view_mut((0, 0), (m + n, m + n)).copy_from(&top);
    big.view_mut((0, xo), (m + n, n))
        .copy_from(&a_q.transpose());
    big.view_mut((xo, 0), (n, m + n)).copy_from(&a_q);
    big.view_mut((xo, xo), (n, n))
        .copy_from(&(DMatrix::identity(n, n) / sigma));
    big
}

/// Stacks `(y, w, z, x)` in the order used by [`dense_metric`].
pub fn stack(
    y: &DVector<f64>,
    w: &DVector<f64>,
    z: &DVector<f64>,
    x: &DVector<f64>,
) -> DVector<f64> {
    let parts = [y.as_slice(), w.as_slice(), z.as_slice(), x.as_slice()];
    DVector::from_vec(parts.concat())
}

/// The dual method with every `w`-update carried out in `Range(Q)` through an
/// explicit orthogonal projector, each subproblem solved from its own
/// optimality condition.
pub struct ExplicitRange {
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub rows: (Vec<f64>, Vec<f64>),
    pub cols: (Vec<f64>, Vec<f64>),
    pub lambda_a: f64,
    pub lambda_q: f64,
    pub proj: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w: DVector<f64>,
    pub x: DVector<f64>,
    anchor: (DVector<f64>, DVector<f64>, DVector<f64>),
}

pub struct ExplicitBar {
    pub y: DVector<f64>,
    pub w: DVector<f64>,
    pub z: DVector<f64>,
    pub x: DVector<f64>,
}

impl ExplicitRange {
    pub fn new(planted: &Planted, est: &SpectralEstimates) -> Self {
        let (m, n) = (planted.a.nrows(), planted.a.ncols());
        let proj = &planted.q * pinv(&planted.q);
        let CompositeTerm::BoxIndicator(cols) = &planted.prob.phi else {
            panic!("box-constrained problem expected");
        };
        ExplicitRange {
            q: planted.q.clone(),
            a: planted.a.clone(),
            c: vec_of(&planted.prob.c),
            rows: (
                planted.prob.rows.lower.clone(),
                planted.prob.rows.upper.clone(),
            ),
            cols: (cols.lower.clone(), cols.upper.clone()),
            lambda_a: est.lambda_a,
            lambda_q: est.lambda_q,
            proj,
            y: DVector::zeros(m),
            w: DVector::zeros(n),
            x: DVector::zeros(n),
            anchor: (DVector::zeros(m), DVector::zeros(n), DVector::zeros(n)),
        }
    }

    pub fn step(&mut self, sigma: f64, t: usize) -> ExplicitBar {
        let (q, a, c) = (&self.q, &self.a, &self.c);
        let at = a.transpose();
        let resid =
            |w: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>| -(q * w) + &at * y + z - c;

        // z-step: the prox residual of phi at r_z
        let r_z = &self.x + (-(q * &self.w) + &at * &self.y - c) * sigma;
        let z = (box_project(&r_z, &self.cols.0, &self.cols.1) - &r_z) / sigma;
        let x_bar = &self.x + resid(&self.w, &self.y, &z) * sigma;

        let denom = 1.0 + sigma * self.lambda_q;
        let w_target = |y: &DVector<f64>| {
            let v = &self.w * (sigma * self.lambda_q) + &x_bar + resid(&self.w, y, &z) * sigma;
            &self.proj * v / denom
        };
        let w_half = w_target(&self.y);

        // y-step: minimize delta*_K(-y) + <g, y> + sigma lambda_A / 2 ||y||^2
        let sl = sigma * self.lambda_a;
        let g = a * &x_bar + a * (-(q * &w_half) + &at * &self.y + &z - c) * sigma - &self.y * sl;
        let y = (box_project(&g, &self.rows.0, &self.rows.1) - &g) / sl;
        let w = w_target(&y);

        let k = t as f64;
        let reflect = |u: &DVector<f64>, bar: &DVector<f64>, anchor: &DVector<f64>| {
            anchor / (k + 2.0) + (bar * 2.0 - u) * ((k + 1.0) / (k + 2.0))
        };
        self.y = reflect(&self.y, &y, &self.anchor.0);
        self.w = reflect(&self.w, &w, &self.anchor.1);
        self.x = reflect(&self.x, &x_bar, &self.anchor.2);
        ExplicitBar { y, w, z, x: x_bar }
    }
}

/// Cyclic coordinate descent for `1/2 ||A x - b||^2 + lambda ||x||_1`.
pub fn lasso_coordinate_descent(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let q = a.ncols();
    let norms: Vec<f64> = (0..q).map(|j| a.column(j).norm_squared()).collect();
    let mut x = DVector::zeros(q);
    let mut r = b.clone();
    for _ in 0..200_000 {
        let mut delta: f64 = 0.0;
        for j in 0..q {
            if norms[j] == 0.0 {
                continue;
            }
            let rho = a.column(j).dot(&r) + norms[j] * x[j];
            let next = hprqp::problem::soft_threshold(rho, lambda) / norms[j];
            let d: f64 = next - x[j];
            if d != 0.0 {
                r.axpy(-d, &a.column(j), 1.0);
                x[j] = next;
                delta = delta.max(d.abs());
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    x
}

pub fn lasso_objective(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    0.5 * (a * x - b).norm_squared() + lambda * x.lp_norm(1)
}
