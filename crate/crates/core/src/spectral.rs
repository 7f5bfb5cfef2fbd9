//! Power-method estimates of `lambda_1(A A^T)` and `lambda_1(Q)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, norm2, CsrMatrix};
use crate::problem::{CcqpProblem, PsdOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-4,
            max_iter: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of a self-adjoint PSD operator of dimension `dim`.
///
/// Stops once successive Rayleigh quotients differ by less than
/// `tol * current`. A zero operator is detected from the first product and
/// reported as `0`.
pub fn power_method<F>(mut apply: F, dim: usize, opts: PowerOptions) -> PowerResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return PowerResult {
            value: 0.0,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut mv = vec![0.0; dim];
    let mut prev = f64::NAN;
    for it in 1..=opts.max_iter {
        apply(&v, &mut mv);
        let nmv = norm2(&mv);
        if nmv < 1e-30 {
            return PowerResult {
                value: 0.0,
                iterations: it,
            };
        }
        let rayleigh = dot(&v, &mv);
        for (vi, mi) in v.iter_mut().zip(&mv) {
            *vi = mi / nmv;
        }
        if (rayleigh - prev).abs() < opts.tol * rayleigh.abs() {
            return PowerResult {
                value: rayleigh,
                iterations: it,
            };
        }
        prev = rayleigh;
    }
    PowerResult {
        value: prev,
        iterations: opts.max_iter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimates {
    /// Upper estimate of `lambda_1(A A^T)`.
    pub lambda_a: f64,
    /// Upper estimate of `lambda_1(Q)`; zero only when `Q` vanishes.
    pub lambda_q: f64,
    pub iterations_a: usize,
    pub iterations_q: usize,
}

pub fn estimate_parts(
    a: &CsrMatrix,
    at: &CsrMatrix,
    q: &PsdOperator,
    safety: f64,
    opts: PowerOptions,
) -> SpectralEstimates {
    let (m, n) = (a.nrows(), a.ncols());
    let mut tmp = vec![0.0; n];
    let ra = power_method(
        |v, out| {
            at.mul_vec(v, &mut tmp);
            a.mul_vec(&tmp, out);
        },
        m,
        opts,
    );
    let rq = if q.is_zero() {
        PowerResult {
            value: 0.0,
            iterations: 0,
        }
    } else {
        power_method(|v, out| q.apply_into(v, out), n, opts)
    };
    SpectralEstimates {
        lambda_a: safety * ra.value.max(0.0),
        lambda_q: safety * rq.value.max(0.0),
        iterations_a: ra.iterations,
        iterations_q: rq.iterations,
    }
}

pub fn estimate(prob: &CcqpProblem, safety: f64, opts: PowerOptions) -> SpectralEstimates {
    let at = prob.a.transpose();
    estimate_parts(&prob.a, &at, &prob.q, safety, opts)
}
