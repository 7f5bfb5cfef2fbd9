use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, PsdOperator};

/// A random convex QP in the style of the OSQP "random" class.
///
/// * `Q = M^T M + 1e-2 I`, with `M` an `n x n` matrix whose entries are
///   standard normal with probability `density`;
/// * `A` has two standard normal entries per row in distinct columns;
/// * `l_i = -U(0, 1)`, `u_i = U(0, 1)`, so `x = 0` is feasible;
/// * `c` is standard normal and `x` is free.
pub fn gen_random_qp(n: usize, m: usize, density: f64, seed: u64) -> Result<CcqpProblem> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidProblem("random QP needs n, m >= 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidProblem(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    // rows of M as sparse lists; Q accumulates the outer products row by row
    let mut q_acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for _ in 0..n {
        let row: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                if rng.random::<f64>() < density {
                    Some((j, normal(&mut rng)))
                } else {
                    None
                }
            })
            .collect();
        for &(i, vi) in &row {
            for &(j, vj) in &row {
                *q_acc.entry((i, j)).or_insert(0.0) += vi * vj;
            }
        }
    }
    for i in 0..n {
        *q_acc.entry((i, i)).or_insert(0.0) += 1e-2;
    }
    let q_trip: Vec<_> = q_acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    let q = CsrMatrix::from_triplets(n, n, &q_trip)?;

    let mut a_trip = Vec::with_capacity(2 * m);
    for i in 0..m {
        let j1 = rng.random_range(0..n);
        a_trip.push((i, j1, normal(&mut rng)));
        if n > 1 {
            let mut j2 = rng.random_range(0..n - 1);
            if j2 >= j1 {
                j2 += 1;
            }
            a_trip.push((i, j2, normal(&mut rng)));
        }
    }
    let a = CsrMatrix::from_triplets(m, n, &a_trip)?;

    let lower: Vec<f64> = (0..m).map(|_| -rng.random::<f64>()).collect();
    let upper: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let c: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();

    Ok(CcqpProblem::new(
        PsdOperator::Sparse(q),
        a,
        c,
        Bounds::new(lower, upper)?,
        CompositeTerm::free(n),
    )?
    .with_name(format!("random_n{n}_m{m}_s{seed}")))
}
