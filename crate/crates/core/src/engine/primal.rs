//! HPR applied to the two primal reformulations
//!
//! ```text
//! (P1)  min 1/2 <x, Qx> + <c, x> + phi(x) + delta_K(s)   s.t.  A x = s
//! (P2)  min 1/2 <v, Qv> + <c, x> + phi(x) + delta_K(s)   s.t.  A x = s, x = v
//! ```
//!
//! with the proximal terms that make every subproblem explicit. They serve as
//! baselines for the dual method and share its restart and penalty machinery.

use crate::error::Result;
use crate::linalg::{dot, CsrMatrix};
use crate::problem::CcqpProblem;
use crate::spectral::SpectralEstimates;

use super::iterate::reflect_and_average;
use super::merit::{primal1_metric_sq, primal2_metric_sq};
use super::IterateBundle;

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

#[derive(Debug, Clone)]
struct P1Point {
    x: Vec<f64>,
    y: Vec<f64>,
    ax: Vec<f64>,
    qx: Vec<f64>,
    aty: Vec<f64>,
}

impl P1Point {
    fn zeros(m: usize, n: usize) -> Self {
        P1Point {
            x: vec![0.0; n],
            y: vec![0.0; m],
            ax: vec![0.0; m],
            qx: vec![0.0; n],
            aty: vec![0.0; n],
        }
    }
}

/// Splitting of (P1): `s`, then `y`, then `x` with
/// `S_x = lambda_Q I - Q + sigma (lambda_A I - A^T A)`.
#[derive(Debug, Clone)]
pub struct Primal1Splitting<'a> {
    prob: &'a CcqpProblem,
    at: CsrMatrix,
    lambda_a: f64,
    lambda_q: f64,
    has_q: bool,
    u: P1Point,
    anchor: P1Point,
    bar: P1Point,
    r: Vec<f64>,
    last_tau: f64,
}

impl<'a> Primal1Splitting<'a> {
    pub fn new(prob: &'a CcqpProblem, est: &SpectralEstimates) -> Self {
        Self::with_transpose(prob, prob.a.transpose(), est)
    }

    pub(crate) fn with_transpose(
        prob: &'a CcqpProblem,
        at: CsrMatrix,
        est: &SpectralEstimates,
    ) -> Self {
        let (m, n) = (prob.m(), prob.n());
        Primal1Splitting {
            prob,
            at,
            lambda_a: if est.lambda_a > 0.0 {
                est.lambda_a
            } else {
                1.0
            },
            lambda_q: est.lambda_q.max(0.0),
            has_q: est.lambda_q > 0.0,
            u: P1Point::zeros(m, n),
            anchor: P1Point::zeros(m, n),
            bar: P1Point::zeros(m, n),
            r: vec![0.0; n],
            last_tau: 1.0,
        }
    }

    pub fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        let p = self.prob;
        let n = p.n();
        let (u, bar) = (&mut self.u, &mut self.bar);
        for i in 0..p.m() {
            let s = (u.ax[i] - u.y[i] / sigma)
                .max(p.rows.lower[i])
                .min(p.rows.upper[i]);
            bar.y[i] = u.y[i] + sigma * (s - u.ax[i]);
        }
        self.at.mul_vec(&bar.y, &mut bar.aty);
        let tau = self.lambda_q + sigma * self.lambda_a;
        for i in 0..n {
            let grad = u.qx[i] + p.c[i] - (2.0 * bar.aty[i] - u.aty[i]);
            self.r[i] = u.x[i] - grad / tau;
        }
        p.phi.prox_into(1.0 / tau, &self.r, &mut bar.x);
        p.a.mul_vec(&bar.x, &mut bar.ax);
        if self.has_q {
            p.q.apply_into(&bar.x, &mut bar.qx);
        }

        let dx = diff(&u.x, &bar.x);
        let dy = diff(&u.y, &bar.y);
        let a_dx = diff(&u.ax, &bar.ax);
        let q_dx = diff(&u.qx, &bar.qx);
        let merit = primal1_metric_sq(
            &dx,
            &dy,
            &a_dx,
            &q_dx,
            sigma,
            tau,
            tau * dot(&u.x, &u.x) + dot(&u.y, &u.y) / sigma,
        );

        let a = &self.anchor;
        reflect_and_average(&mut u.x, &bar.x, &a.x, t);
        reflect_and_average(&mut u.y, &bar.y, &a.y, t);
        reflect_and_average(&mut u.ax, &bar.ax, &a.ax, t);
        reflect_and_average(&mut u.aty, &bar.aty, &a.aty, t);
        if self.has_q {
            reflect_and_average(&mut u.qx, &bar.qx, &a.qx, t);
        }
        self.last_tau = tau;
        merit
    }

    pub fn sigma_coefficients(&self) -> [f64; 3] {
        let dx = diff(&self.bar.x, &self.anchor.x);
        let dy = diff(&self.bar.y, &self.anchor.y);
        [self.lambda_a * dot(&dx, &dx), dot(&dy, &dy), 0.0]
    }

    pub fn restart(&mut self) {
        self.anchor = self.bar.clone();
        self.u = self.bar.clone();
    }

    pub fn bar(&self) -> IterateBundle {
        let b = &self.bar;
        let z =
            b.x.iter()
                .zip(&self.r)
                .map(|(x, r)| self.last_tau * (x - r))
                .collect();
        IterateBundle {
            y: b.y.clone(),
            w: b.x.clone(),
            z,
            x: b.x.clone(),
            qw: b.qx.clone(),
            ax: b.ax.clone(),
            aty: b.aty.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct P2Point {
    x: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    t: Vec<f64>,
    ax: Vec<f64>,
    aty: Vec<f64>,
    qv: Vec<f64>,
}

impl P2Point {
    fn zeros(m: usize, n: usize) -> Self {
        P2Point {
            x: vec![0.0; n],
            v: vec![0.0; n],
            y: vec![0.0; m],
            t: vec![0.0; n],
            ax: vec![0.0; m],
            aty: vec![0.0; n],
            qv: vec![0.0; n],
        }
    }
}

/// Splitting of (P2): `(s, v)` jointly with `S_v = lambda_Q I - Q`, then the
/// multipliers `(y, t)`, then `x` with `S_x = sigma (lambda_A I - A^T A)`.
#[derive(Debug, Clone)]
pub struct Primal2Splitting<'a> {
    prob: &'a CcqpProblem,
    at: CsrMatrix,
    lambda_a: f64,
    lambda_q: f64,
    has_q: bool,
    u: P2Point,
    anchor: P2Point,
    bar: P2Point,
    r: Vec<f64>,
    last_rho: f64,
}

impl<'a> Primal2Splitting<'a> {
    pub fn new(prob: &'a CcqpProblem, est: &SpectralEstimates) -> Self {
        Self::with_transpose(prob, prob.a.transpose(), est)
    }

    pub(crate) fn with_transpose(
        prob: &'a CcqpProblem,
        at: CsrMatrix,
        est: &SpectralEstimates,
    ) -> Self {
        let (m, n) = (prob.m(), prob.n());
        Primal2Splitting {
            prob,
            at,
            lambda_a: if est.lambda_a > 0.0 {
                est.lambda_a
            } else {
                1.0
            },
            lambda_q: est.lambda_q.max(0.0),
            has_q: est.lambda_q > 0.0,
            u: P2Point::zeros(m, n),
            anchor: P2Point::zeros(m, n),
            bar: P2Point::zeros(m, n),
            r: vec![0.0; n],
            last_rho: 1.0,
        }
    }

    pub fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        let p = self.prob;
        let n = p.n();
        let (u, bar) = (&mut self.u, &mut self.bar);
        for i in 0..p.m() {
            let s = (u.ax[i] - u.y[i] / sigma)
                .max(p.rows.lower[i])
                .min(p.rows.upper[i]);
            bar.y[i] = u.y[i] + sigma * (s - u.ax[i]);
        }
        let lq = self.lambda_q;
        for i in 0..n {
            bar.v[i] = (sigma * u.x[i] - u.t[i] + lq * u.v[i] - u.qv[i]) / (sigma + lq);
            bar.t[i] = u.t[i] + sigma * (bar.v[i] - u.x[i]);
        }
        self.at.mul_vec(&bar.y, &mut bar.aty);
        let rho = sigma * (1.0 + self.lambda_a);
        for i in 0..n {
            let g = 2.0 * bar.aty[i] - u.aty[i] + 2.0 * bar.t[i] - u.t[i] - p.c[i];
            self.r[i] = u.x[i] + g / rho;
        }
        p.phi.prox_into(1.0 / rho, &self.r, &mut bar.x);
        p.a.mul_vec(&bar.x, &mut bar.ax);
        if self.has_q {
            p.q.apply_into(&bar.v, &mut bar.qv);
        }

        let dx = diff(&u.x, &bar.x);
        let dv = diff(&u.v, &bar.v);
        let dy = diff(&u.y, &bar.y);
        let dt = diff(&u.t, &bar.t);
        let a_dx = diff(&u.ax, &bar.ax);
        let q_dv = diff(&u.qv, &bar.qv);
        let merit = primal2_metric_sq(
            &dx,
            &dv,
            &dy,
            &dt,
            &a_dx,
            &q_dv,
            sigma,
            self.lambda_a,
            lq,
            sigma * (1.0 + self.lambda_a) * dot(&u.x, &u.x)
                + (dot(&u.y, &u.y) + dot(&u.t, &u.t)) / sigma
                + lq * dot(&u.v, &u.v),
        );

        let a = &self.anchor;
        reflect_and_average(&mut u.x, &bar.x, &a.x, t);
        reflect_and_average(&mut u.v, &bar.v, &a.v, t);
        reflect_and_average(&mut u.y, &bar.y, &a.y, t);
        reflect_and_average(&mut u.t, &bar.t, &a.t, t);
        reflect_and_average(&mut u.ax, &bar.ax, &a.ax, t);
        reflect_and_average(&mut u.aty, &bar.aty, &a.aty, t);
        if self.has_q {
            reflect_and_average(&mut u.qv, &bar.qv, &a.qv, t);
        }
        self.last_rho = rho;
        merit
    }

    pub fn sigma_coefficients(&self) -> [f64; 3] {
        let dx = diff(&self.bar.x, &self.anchor.x);
        let dy = diff(&self.bar.y, &self.anchor.y);
        let dt = diff(&self.bar.t, &self.anchor.t);
        [
            (1.0 + self.lambda_a) * dot(&dx, &dx),
            dot(&dy, &dy) + dot(&dt, &dt),
            0.0,
        ]
    }

    pub fn restart(&mut self) {
        self.anchor = self.bar.clone();
        self.u = self.bar.clone();
    }

    pub fn bar(&self) -> IterateBundle {
        let b = &self.bar;
        let z =
            b.x.iter()
                .zip(&self.r)
                .map(|(x, r)| self.last_rho * (x - r))
                .collect();
        let mut qx = vec![0.0; b.x.len()];
        if self.has_q {
            self.prob.q.apply_into(&b.x, &mut qx);
        }
        IterateBundle {
            y: b.y.clone(),
            w: b.x.clone(),
            z,
            x: b.x.clone(),
            qw: qx,
            ax: b.ax.clone(),
            aty: b.aty.clone(),
        }
    }
}
