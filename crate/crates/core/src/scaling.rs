//! Diagonal preconditioning: Ruiz equilibration of the symmetric block
//! `[[Q, A^T], [A, 0]]` followed by Pock-Chambolle scaling of `A`.
//!
//! With row factors `E` and column factors `D` the scaled data are
//! `A' = E A D`, `Q' = D Q D`, `c' = D c`, `K' = E K`, `[L', U'] = [L, U] / D`,
//! and a scaled point `x'` corresponds to `x = D x'`.

use crate::engine::IterateBundle;
use crate::error::{Error, Result};
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, PsdOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingInfo {
    /// Row scaling of `A`, length `m`.
    pub row: Vec<f64>,
    /// Column scaling shared by `A` and `Q`, length `n`.
    pub col: Vec<f64>,
    pub applied: bool,
}

impl ScalingInfo {
    pub fn identity(m: usize, n: usize) -> Self {
        ScalingInfo {
            row: vec![1.0; m],
            col: vec![1.0; n],
            applied: false,
        }
    }

    /// Factors of `self` followed by `next`.
    pub fn compose(&self, next: &ScalingInfo) -> ScalingInfo {
        ScalingInfo {
            row: self.row.iter().zip(&next.row).map(|(a, b)| a * b).collect(),
            col: self.col.iter().zip(&next.col).map(|(a, b)| a * b).collect(),
            applied: self.applied || next.applied,
        }
    }

    pub fn unscale_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.col).map(|(v, d)| v * d).collect()
    }

    pub fn unscale_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.row).map(|(v, e)| v * e).collect()
    }

    /// Dual-side `n`-vectors (`z`, `Q w`, `A^T y`) scale inversely.
    pub fn unscale_dual_n(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.col).map(|(v, d)| v / d).collect()
    }

    pub fn unscale_ax(&self, ax: &[f64]) -> Vec<f64> {
        ax.iter().zip(&self.row).map(|(v, e)| v / e).collect()
    }
}

fn inv_sqrt_or_one(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        1.0 / v.sqrt()
    } else {
        1.0
    }
}

/// Applies one round of factors in place.
fn apply_factors(prob: &mut CcqpProblem, row: &[f64], col: &[f64]) {
    prob.a.scale(row, col);
    if let PsdOperator::Sparse(q) = &mut prob.q {
        q.scale(col, col);
    }
    for (ci, d) in prob.c.iter_mut().zip(col) {
        *ci *= d;
    }
    for ((lo, hi), r) in prob
        .rows
        .lower
        .iter_mut()
        .zip(&mut prob.rows.upper)
        .zip(row)
    {
        *lo *= r;
        *hi *= r;
    }
    if let CompositeTerm::BoxIndicator(b) = &mut prob.phi {
        for ((lo, hi), d) in b.lower.iter_mut().zip(&mut b.upper).zip(col) {
            *lo /= d;
            *hi /= d;
        }
    }
}

fn scalable(prob: &CcqpProblem) -> bool {
    prob.q.is_explicit() && matches!(prob.phi, CompositeTerm::BoxIndicator(_))
}

/// Ruiz equilibration over `iters` rounds. Problems with a matrix-free `Q` or
/// an l1 term are returned unchanged with an identity scaling.
pub fn ruiz_equilibrate(prob: &CcqpProblem, iters: usize) -> (CcqpProblem, ScalingInfo) {
    let (m, n) = (prob.m(), prob.n());
    let mut out = prob.clone();
    let mut info = ScalingInfo::identity(m, n);
    if !scalable(prob) {
        return (out, info);
    }
    for _ in 0..iters {
        let a_col = out.a.col_inf_norms();
        let q_row = match &out.q {
            PsdOperator::Sparse(q) => q.row_inf_norms(),
            PsdOperator::MatrixFree(_) => unreachable!(),
        };
        let col: Vec<f64> = a_col
            .iter()
            .zip(&q_row)
            .map(|(a, q)| inv_sqrt_or_one(a.max(*q)))
            .collect();
        let row: Vec<f64> = out
            .a
            .row_inf_norms()
            .into_iter()
            .map(inv_sqrt_or_one)
            .collect();
        apply_factors(&mut out, &row, &col);
        info = info.compose(&ScalingInfo {
            row,
            col,
            applied: true,
        });
    }
    (out, info)
}

/// Pock-Chambolle diagonal scaling of `A` with parameter `alpha`: row `i` is
/// scaled by `1/sqrt(sum_j |a_ij|^(2-alpha))`, column `j` by
/// `1/sqrt(sum_i |a_ij|^alpha)`.
pub fn pock_chambolle(prob: &CcqpProblem, alpha: f64) -> (CcqpProblem, ScalingInfo) {
    let (m, n) = (prob.m(), prob.n());
    let mut out = prob.clone();
    if !scalable(prob) {
        return (out, ScalingInfo::identity(m, n));
    }
    let row: Vec<f64> = out
        .a
        .row_abs_pow_sums(2.0 - alpha)
        .into_iter()
        .map(inv_sqrt_or_one)
        .collect();
    let col: Vec<f64> = out
        .a
        .col_abs_pow_sums(alpha)
        .into_iter()
        .map(inv_sqrt_or_one)
        .collect();
    apply_factors(&mut out, &row, &col);
    (
        out,
        ScalingInfo {
            row,
            col,
            applied: true,
        },
    )
}

/// The default pipeline: Ruiz rounds, then Pock-Chambolle.
pub fn precondition(
    prob: &CcqpProblem,
    ruiz_iters: usize,
    alpha: f64,
) -> (CcqpProblem, ScalingInfo) {
    let (ruiz, info_r) = ruiz_equilibrate(prob, ruiz_iters);
    let (pc, info_p) = pock_chambolle(&ruiz, alpha);
    (pc, info_r.compose(&info_p))
}

/// Maps an iterate of the scaled problem back to original coordinates.
pub fn unscale_solution(info: &ScalingInfo, u: &IterateBundle) -> Result<IterateBundle> {
    let (m, n) = (info.row.len(), info.col.len());
    for (context, expected, got) in [
        ("unscale y", m, u.y.len()),
        ("unscale ax", m, u.ax.len()),
        ("unscale x", n, u.x.len()),
        ("unscale w", n, u.w.len()),
        ("unscale z", n, u.z.len()),
        ("unscale qw", n, u.qw.len()),
        ("unscale aty", n, u.aty.len()),
    ] {
        if expected != got {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
    }
    Ok(IterateBundle {
        y: info.unscale_y(&u.y),
        w: info.unscale_x(&u.w),
        z: info.unscale_dual_n(&u.z),
        x: info.unscale_x(&u.x),
        qw: info.unscale_dual_n(&u.qw),
        ax: info.unscale_ax(&u.ax),
        aty: info.unscale_dual_n(&u.aty),
    })
}

/// Row infinity norms of the symmetric block `[[Q, A^T], [A, 0]]`.
pub fn stacked_row_inf_norms(prob: &CcqpProblem) -> Option<Vec<f64>> {
    let PsdOperator::Sparse(q) = &prob.q else {
        return None;
    };
    let mut out: Vec<f64> = q
        .row_inf_norms()
        .into_iter()
        .zip(prob.a.col_inf_norms())
        .map(|(a, b)| a.max(b))
        .collect();
    out.extend(prob.a.row_inf_norms());
    Some(out)
}

/// Bounds scaled like the rows of `A`; exposed for building `sigma_0`.
pub fn scaled_row_bounds(info: &ScalingInfo, rows: &Bounds) -> Bounds {
    Bounds {
        lower: rows
            .lower
            .iter()
            .zip(&info.row)
            .map(|(l, e)| l * e)
            .collect(),
        upper: rows
            .upper
            .iter()
            .zip(&info.row)
            .map(|(u, e)| u * e)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(a: CsrMatrix) -> CcqpProblem {
        let (m, n) = (a.nrows(), a.ncols());
        CcqpProblem::new(
            PsdOperator::zero(n),
            a,
            vec![1.0; n],
            Bounds::new(vec![-1.0; m], vec![1.0; m]).unwrap(),
            CompositeTerm::BoxIndicator(Bounds::new(vec![0.0; n], vec![2.0; n]).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn ruiz_one_round_on_scalar() {
        let p = lp(CsrMatrix::from_dense(1, 1, &[4.0]));
        let (s, info) = ruiz_equilibrate(&p, 1);
        assert_eq!(info.row, vec![0.5]);
        assert_eq!(info.col, vec![0.5]);
        assert_eq!(s.a.get(0, 0), 1.0);
    }

    #[test]
    fn ruiz_fixed_point_on_unit_entries() {
        let p = lp(CsrMatrix::from_dense(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let (_, info) = ruiz_equilibrate(&p, 10);
        for f in info.row.iter().chain(&info.col) {
            assert!((f - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn ruiz_balances_random_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = vec![0.0; 20];
        for v in a.iter_mut() {
            if rng.random::<f64>() < 0.5 {
                *v = rng.random_range(-50.0..50.0);
            }
        }
        // guarantee every row and column has an entry
        for i in 0..5 {
            a[i * 4 + i % 4] = rng.random_range(1.0..10.0);
        }
        let mdense: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut qd = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                qd[i * 4 + j] = (0..4)
                    .map(|k| mdense[k * 4 + i] * mdense[k * 4 + j])
                    .sum::<f64>()
                    * 10.0;
            }
        }
        let p = CcqpProblem::new(
            PsdOperator::Sparse(CsrMatrix::from_dense(4, 4, &qd)),
            CsrMatrix::from_dense(5, 4, &a),
            vec![1.0; 4],
            Bounds::free(5),
            CompositeTerm::free(4),
        )
        .unwrap();
        let (s, _) = ruiz_equilibrate(&p, 10);
        for v in stacked_row_inf_norms(&s).unwrap() {
            assert!((0.5..=2.0).contains(&v), "row norm {v}");
        }
    }

    #[test]
    fn pock_chambolle_symmetric() {
        let p = lp(CsrMatrix::from_dense(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let (s, info) = pock_chambolle(&p, 1.0);
        let r = 1.0 / 2f64.sqrt();
        for f in info.row.iter().chain(&info.col) {
            assert!((f - r).abs() < 1e-15);
        }
        for (_, _, v) in s.a.triplets() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn pock_chambolle_with_empty_row_and_column() {
        let p = lp(CsrMatrix::from_dense(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        let (s, info) = pock_chambolle(&p, 1.0);
        let r = 1.0 / 2f64.sqrt();
        assert!((info.row[0] - r).abs() < 1e-15 && info.row[1] == 1.0);
        assert!((info.col[0] - r).abs() < 1e-15 && info.col[1] == 1.0);
        assert!((s.a.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let p = lp(CsrMatrix::zeros(2, 3));
        let (_, info) = pock_chambolle(&p, 1.0);
        assert!(info.row.iter().chain(&info.col).all(|&f| f == 1.0));
        let (_, info) = ruiz_equilibrate(&p, 10);
        assert!(info.row.iter().chain(&info.col).all(|&f| f == 1.0));
    }

    #[test]
    fn identity_unscale_is_identity() {
        let info = ScalingInfo::identity(1, 2);
        let u = IterateBundle {
            y: vec![3.0],
            w: vec![1.0, 2.0],
            z: vec![-1.0, 0.5],
            x: vec![4.0, 5.0],
            qw: vec![0.1, 0.2],
            ax: vec![7.0],
            aty: vec![0.3, 0.4],
        };
        assert_eq!(unscale_solution(&info, &u).unwrap(), u);
    }

    #[test]
    fn unscale_column_factor() {
        let info = ScalingInfo {
            row: vec![],
            col: vec![2.0],
            applied: true,
        };
        let u = IterateBundle::zeros(0, 1);
        let u = IterateBundle {
            x: vec![3.0],
            z: vec![3.0],
            ..u
        };
        let out = unscale_solution(&info, &u).unwrap();
        assert_eq!(out.x, vec![6.0]);
        assert_eq!(out.z, vec![1.5]);
    }

    #[test]
    fn unscale_dimension_mismatch() {
        let info = ScalingInfo::identity(2, 2);
        assert!(unscale_solution(&info, &IterateBundle::zeros(1, 2)).is_err());
    }

    #[test]
    fn scaled_objective_equivalence_and_sign_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
        let q = CsrMatrix::from_dense(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -0.5, 0.0, -0.5, 2.0]);
        let p = CcqpProblem::new(
            PsdOperator::Sparse(q),
            CsrMatrix::from_dense(4, 3, &a),
            vec![1.0, -2.0, 0.5],
            Bounds::new(vec![-1.0; 4], vec![1.0; 4]).unwrap(),
            CompositeTerm::BoxIndicator(Bounds::new(vec![-10.0; 3], vec![10.0; 3]).unwrap()),
        )
        .unwrap();
        let (s, info) = precondition(&p, 10, 1.0);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xs: Vec<f64> = x.iter().zip(&info.col).map(|(v, d)| v / d).collect();
            let f0 = p.objective(&x).unwrap();
            let f1 = s.objective(&xs).unwrap();
            assert!((f0 - f1).abs() <= 1e-10 * (1.0 + f0.abs()));
        }
        for ((_, _, v0), (_, _, v1)) in p.a.triplets().zip(s.a.triplets()) {
            assert_eq!(v0.signum(), v1.signum());
        }
        assert_eq!(p.a.nnz(), s.a.nnz());
        assert!(info
            .row
            .iter()
            .chain(&info.col)
            .all(|f| *f > 0.0 && f.is_finite()));
    }

    #[test]
    fn matrix_free_is_not_scaled() {
        struct Id;
        impl crate::problem::LinearOperator for Id {
            fn dim(&self) -> usize {
                1
            }
            fn apply(&self, x: &[f64], out: &mut [f64]) {
                out.copy_from_slice(x);
            }
        }
        let p = CcqpProblem::new(
            PsdOperator::MatrixFree(std::sync::Arc::new(Id)),
            CsrMatrix::from_dense(1, 1, &[5.0]),
            vec![1.0],
            Bounds::free(1),
            CompositeTerm::free(1),
        )
        .unwrap();
        let (s, info) = precondition(&p, 10, 1.0);
        assert!(!info.applied);
        assert_eq!(s.a.get(0, 0), 5.0);
    }
}
