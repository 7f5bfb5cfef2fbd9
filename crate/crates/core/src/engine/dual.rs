//! One inner step of the dual method on the restricted Wolfe dual:
//!
//! ```text
//! r_z   = x + sigma (-Q w + A^T y - c)
//! x'    = Prox_{sigma phi}(r_z),                     x^ = 2 x' - x
//! w'_h  = (sigma lambda_Q w + x^) / (1 + sigma lambda_Q)
//! r_y   = A (x^ + sigma (Q w - Q w'_h)) - sigma lambda_A y
//! y'    = (Pi_K(r_y) - r_y) / (sigma lambda_A)
//! w'    = w'_h + sigma / (1 + sigma lambda_Q) A^T (y' - y)
//! ```
//!
//! followed by reflection and Halpern averaging against the loop anchor. The
//! slack `z' = (x' - r_z) / sigma` never enters the recursion and is formed
//! only when a candidate is requested.

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use crate::problem::{CcqpProblem, CompositeTerm};
use crate::spectral::SpectralEstimates;

use super::iterate::reflect_and_average;
use super::merit::{dual_metric_sq, DualDiff};
use super::IterateBundle;

#[derive(Debug, Clone)]
struct Point {
    y: Vec<f64>,
    w: Vec<f64>,
    x: Vec<f64>,
    qw: Vec<f64>,
    aty: Vec<f64>,
}

impl Point {
    fn zeros(m: usize, n: usize) -> Self {
        Point {
            y: vec![0.0; m],
            w: vec![0.0; n],
            x: vec![0.0; n],
            qw: vec![0.0; n],
            aty: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone)]
struct Scratch {
    x_hat: Vec<f64>,
    w_half: Vec<f64>,
    qw_half: Vec<f64>,
    tmp: Vec<f64>,
    r_y: Vec<f64>,
    dy: Vec<f64>,
    dw: Vec<f64>,
    dx: Vec<f64>,
    at_dy: Vec<f64>,
    q_dw: Vec<f64>,
    q_at_dy: Vec<f64>,
}

impl Scratch {
    fn new(m: usize, n: usize) -> Self {
        Scratch {
            x_hat: vec![0.0; n],
            w_half: vec![0.0; n],
            qw_half: vec![0.0; n],
            tmp: vec![0.0; n],
            r_y: vec![0.0; m],
            dy: vec![0.0; m],
            dw: vec![0.0; n],
            dx: vec![0.0; n],
            at_dy: vec![0.0; n],
            q_dw: vec![0.0; n],
            q_at_dy: vec![0.0; n],
        }
    }
}

/// State of the dual method on a fixed problem. The problem is usually the
/// preconditioned one; nothing here knows about scaling.
#[derive(Debug, Clone)]
pub struct DualSplitting<'a> {
    prob: &'a CcqpProblem,
    at: CsrMatrix,
    lambda_a: f64,
    lambda_q: f64,
    has_q: bool,
    has_rows: bool,
    u: Point,
    anchor: Point,
    bar: Point,
    r_z: Vec<f64>,
    last_sigma: f64,
    s: Scratch,
}

impl<'a> DualSplitting<'a> {
    /// Starts from the origin.
    pub fn new(prob: &'a CcqpProblem, est: &SpectralEstimates) -> Self {
        Self::with_transpose(prob, prob.a.transpose(), est)
    }

    pub(crate) fn with_transpose(
        prob: &'a CcqpProblem,
        at: CsrMatrix,
        est: &SpectralEstimates,
    ) -> Self {
        let (m, n) = (prob.m(), prob.n());
        let has_q = est.lambda_q > 0.0;
        DualSplitting {
            prob,
            at,
            // any positive value keeps S_y + A A^T definite when A vanishes
            lambda_a: if est.lambda_a > 0.0 {
                est.lambda_a
            } else {
                1.0
            },
            lambda_q: if has_q { est.lambda_q } else { 0.0 },
            has_q,
            has_rows: m > 0,
            u: Point::zeros(m, n),
            anchor: Point::zeros(m, n),
            bar: Point::zeros(m, n),
            r_z: vec![0.0; n],
            last_sigma: 1.0,
            s: Scratch::new(m, n),
        }
    }

    /// Starts from `start`, which also becomes the Halpern anchor. Only the
    /// `y`, `w` and `x` blocks are read; products are recomputed.
    pub fn with_start(
        prob: &'a CcqpProblem,
        est: &SpectralEstimates,
        start: &IterateBundle,
    ) -> Result<Self> {
        let mut s = Self::new(prob, est);
        let (m, n) = (prob.m(), prob.n());
        for (context, expected, got) in [
            ("start y", m, start.y.len()),
            ("start w", n, start.w.len()),
            ("start x", n, start.x.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                });
            }
        }
        let mut p = Point {
            y: start.y.clone(),
            w: if s.has_q {
                start.w.clone()
            } else {
                vec![0.0; n]
            },
            x: start.x.clone(),
            qw: vec![0.0; n],
            aty: vec![0.0; n],
        };
        if s.has_q {
            prob.q.apply_into(&p.w, &mut p.qw);
        }
        s.at.mul_vec(&p.y, &mut p.aty);
        s.anchor = p.clone();
        s.bar = p.clone();
        s.u = p;
        Ok(s)
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_q(&self) -> f64 {
        self.lambda_q
    }

    /// One inner step with penalty `sigma` and Halpern index `t`. Returns
    /// `||u - bar u||_M^2` for the iterate `u` the step started from.
    pub fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        let p = self.prob;
        let n = p.n();
        let (u, bar, s) = (&mut self.u, &mut self.bar, &mut self.s);

        for i in 0..n {
            self.r_z[i] = u.x[i] + sigma * (-u.qw[i] + u.aty[i] - p.c[i]);
        }
        p.phi.prox_into(sigma, &self.r_z, &mut bar.x);
        for i in 0..n {
            s.x_hat[i] = 2.0 * bar.x[i] - u.x[i];
        }

        let denom = 1.0 + sigma * self.lambda_q;
        if self.has_q {
            let sl = sigma * self.lambda_q;
            for i in 0..n {
                s.w_half[i] = (sl * u.w[i] + s.x_hat[i]) / denom;
            }
            p.q.apply_into(&s.w_half, &mut s.qw_half);
        }

        if self.has_rows {
            for i in 0..n {
                s.tmp[i] = if self.has_q {
                    s.x_hat[i] + sigma * (u.qw[i] - s.qw_half[i])
                } else {
                    s.x_hat[i]
                };
            }
            p.a.mul_vec(&s.tmp, &mut s.r_y);
            let sl = sigma * self.lambda_a;
            for i in 0..s.r_y.len() {
                let r = s.r_y[i] - sl * u.y[i];
                let proj = r.max(p.rows.lower[i]).min(p.rows.upper[i]);
                bar.y[i] = (proj - r) / sl;
            }
            self.at.mul_vec(&bar.y, &mut bar.aty);
        }

        if self.has_q {
            let coef = sigma / denom;
            for i in 0..n {
                bar.w[i] = s.w_half[i] + coef * (bar.aty[i] - u.aty[i]);
            }
            p.q.apply_into(&bar.w, &mut bar.qw);
        }

        for i in 0..s.dy.len() {
            s.dy[i] = u.y[i] - bar.y[i];
        }
        for i in 0..n {
            s.dw[i] = u.w[i] - bar.w[i];
            s.dx[i] = u.x[i] - bar.x[i];
            s.at_dy[i] = u.aty[i] - bar.aty[i];
            s.q_dw[i] = u.qw[i] - bar.qw[i];
        }
        // Q A^T (y' - y) = (1 + sigma lambda_Q) / sigma * (Q w' - Q w'_h)
        let at_dy_q_at_dy = if self.has_q {
            let f = -denom / sigma;
            for i in 0..n {
                s.q_at_dy[i] = f * (bar.qw[i] - s.qw_half[i]);
            }
            dot(&s.at_dy, &s.q_at_dy)
        } else {
            0.0
        };
        let merit = dual_metric_sq(
            &DualDiff {
                dy: &s.dy,
                dw: &s.dw,
                dx: &s.dx,
                at_dy: &s.at_dy,
                q_dw: &s.q_dw,
                at_dy_q_at_dy,
                reference: sigma
                    * (dot(&u.aty, &u.aty) + dot(&u.qw, &u.qw) + self.lambda_a * dot(&u.y, &u.y))
                    + sigma * self.lambda_q * dot(&u.w, &u.qw).abs()
                    + dot(&u.x, &u.x) / sigma,
            },
            sigma,
            self.lambda_a,
            self.lambda_q,
        );

        let a = &self.anchor;
        reflect_and_average(&mut u.y, &bar.y, &a.y, t);
        reflect_and_average(&mut u.x, &bar.x, &a.x, t);
        reflect_and_average(&mut u.aty, &bar.aty, &a.aty, t);
        if self.has_q {
            reflect_and_average(&mut u.w, &bar.w, &a.w, t);
            reflect_and_average(&mut u.qw, &bar.qw, &a.qw, t);
        }
        self.last_sigma = sigma;
        merit
    }

    /// Penalty-update coefficients from `bar u - anchor`.
    pub fn sigma_coefficients(&self) -> [f64; 3] {
        let (b, a) = (&self.bar, &self.anchor);
        let dy: Vec<f64> = b.y.iter().zip(&a.y).map(|(p, q)| p - q).collect();
        let dx: Vec<f64> = b.x.iter().zip(&a.x).map(|(p, q)| p - q).collect();
        let at_dy: Vec<f64> = b.aty.iter().zip(&a.aty).map(|(p, q)| p - q).collect();
        let mut theta1 = self.lambda_a * dot(&dy, &dy);
        let mut theta3 = 0.0;
        if self.has_q {
            let dw: Vec<f64> = b.w.iter().zip(&a.w).map(|(p, q)| p - q).collect();
            let q_dw: Vec<f64> = b.qw.iter().zip(&a.qw).map(|(p, q)| p - q).collect();
            theta1 += self.lambda_q * dot(&dw, &q_dw) - 2.0 * dot(&q_dw, &at_dy);
            let mut q_at_dy = vec![0.0; at_dy.len()];
            self.prob.q.apply_into(&at_dy, &mut q_at_dy);
            theta3 = dot(&at_dy, &q_at_dy);
        }
        [theta1, dot(&dx, &dx), theta3]
    }

    /// Begins a new outer loop at the latest `bar u`.
    pub fn restart(&mut self) {
        self.anchor = self.bar.clone();
        self.u = self.bar.clone();
    }

    /// The current iterate `u`. Its `z` block is not tracked and reads zero;
    /// `ax` is recomputed.
    pub fn current(&self) -> IterateBundle {
        self.bundle(&self.u, vec![0.0; self.prob.n()])
    }

    pub fn anchor(&self) -> IterateBundle {
        self.bundle(&self.anchor, vec![0.0; self.prob.n()])
    }

    /// `bar u` from the latest step, with `z` formed from the prox residual.
    pub fn bar(&self) -> IterateBundle {
        let sigma = self.last_sigma;
        let mut z: Vec<f64> = self
            .bar
            .x
            .iter()
            .zip(&self.r_z)
            .map(|(x, r)| (x - r) / sigma)
            .collect();
        if let CompositeTerm::WeightedL1 { lambda } = self.prob.phi {
            z.iter_mut().for_each(|v| *v = v.clamp(-lambda, lambda));
        }
        self.bundle(&self.bar, z)
    }

    /// `w'_h` from the latest step (zero when `Q` vanishes).
    pub fn half_w(&self) -> &[f64] {
        &self.s.w_half
    }

    fn bundle(&self, p: &Point, z: Vec<f64>) -> IterateBundle {
        let mut ax = vec![0.0; self.prob.m()];
        self.prob.a.mul_vec(&p.x, &mut ax);
        IterateBundle {
            y: p.y.clone(),
            w: p.w.clone(),
            z,
            x: p.x.clone(),
            qw: p.qw.clone(),
            ax,
            aty: p.aty.clone(),
        }
    }
}
