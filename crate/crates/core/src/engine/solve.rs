//! The outer loop shared by every splitting: restarts, penalty updates,
//! termination checks and the iteration trace.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, CsrMatrix};
use crate::problem::CcqpProblem;
use crate::scaling::{precondition, unscale_solution, ScalingInfo};
use crate::spectral::{self, PowerOptions, SpectralEstimates};

use super::dual::DualSplitting;
use super::kkt::{kkt_residuals_with, KktMeasures, KktReport, Status};
use super::primal::{Primal1Splitting, Primal2Splitting};
use super::restart::{RestartDecision, RestartState};
use super::sigma::sigma_update;
use super::{IterateBundle, Sigma0Rule, SolverConfig, Variant};

/// An iteration method driven by [`run`].
pub trait Splitting {
    /// One inner step; returns `||u - bar u||_M^2`.
    fn step(&mut self, sigma: f64, t: usize) -> Result<f64>;
    /// `(theta1, theta2, theta3)` of the penalty objective from `bar u - anchor`.
    fn sigma_coefficients(&self) -> [f64; 3];
    /// The `lambda` in `sigma^2 theta3 / (1 + lambda sigma)`.
    fn sigma_lambda(&self) -> f64;
    /// Starts a new outer loop at the latest `bar u`.
    fn restart(&mut self);
    /// Primal-dual estimate at the latest `bar u`.
    fn candidate(&self) -> IterateBundle;
}

impl Splitting for DualSplitting<'_> {
    fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        DualSplitting::step(self, sigma, t)
    }
    fn sigma_coefficients(&self) -> [f64; 3] {
        DualSplitting::sigma_coefficients(self)
    }
    fn sigma_lambda(&self) -> f64 {
        self.lambda_q()
    }
    fn restart(&mut self) {
        DualSplitting::restart(self)
    }
    fn candidate(&self) -> IterateBundle {
        self.bar()
    }
}

impl Splitting for Primal1Splitting<'_> {
    fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        Primal1Splitting::step(self, sigma, t)
    }
    fn sigma_coefficients(&self) -> [f64; 3] {
        Primal1Splitting::sigma_coefficients(self)
    }
    fn sigma_lambda(&self) -> f64 {
        0.0
    }
    fn restart(&mut self) {
        Primal1Splitting::restart(self)
    }
    fn candidate(&self) -> IterateBundle {
        self.bar()
    }
}

impl Splitting for Primal2Splitting<'_> {
    fn step(&mut self, sigma: f64, t: usize) -> Result<f64> {
        Primal2Splitting::step(self, sigma, t)
    }
    fn sigma_coefficients(&self) -> [f64; 3] {
        Primal2Splitting::sigma_coefficients(self)
    }
    fn sigma_lambda(&self) -> f64 {
        0.0
    }
    fn restart(&mut self) {
        Primal2Splitting::restart(self)
    }
    fn candidate(&self) -> IterateBundle {
        self.bar()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub r: usize,
    pub t: usize,
    pub sigma: f64,
    #[serde(rename = "R_tilde")]
    pub r_tilde: f64,
    pub eta_gap: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Final candidate in the original problem's coordinates.
    pub solution: IterateBundle,
    pub report: KktReport,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub restarts: usize,
    pub sigma: f64,
    pub estimates: SpectralEstimates,
    pub variant: Variant,
    /// Preconditioning time, excluded from the solve time.
    pub setup_seconds: f64,
    /// Spectral estimation plus iterations.
    pub solve_seconds: f64,
}

/// `||b|| / ||c||` with `b = max(|l|, |u|)`, or 1 when either norm leaves
/// `[1e-16, 1e16]`.
pub fn auto_sigma0(prob: &CcqpProblem) -> f64 {
    let nb = norm2(&prob.rows.magnitude());
    let nc = norm2(&prob.c);
    let ok = |v: f64| (1e-16..=1e16).contains(&v);
    if ok(nb) && ok(nc) {
        nb / nc
    } else {
        1.0
    }
}

/// Solves with the dual method.
pub fn solve(prob: &CcqpProblem, cfg: &SolverConfig) -> Result<SolveOutput> {
    solve_variant(prob, cfg, Variant::Dual)
}

/// Solves with one of the primal baselines.
pub fn solve_primal_variant(
    prob: &CcqpProblem,
    cfg: &SolverConfig,
    variant: Variant,
) -> Result<SolveOutput> {
    if variant == Variant::Dual {
        return Err(Error::InvalidConfig("expected a primal variant".into()));
    }
    solve_variant(prob, cfg, variant)
}

pub fn solve_variant(
    prob: &CcqpProblem,
    cfg: &SolverConfig,
    variant: Variant,
) -> Result<SolveOutput> {
    cfg.validate()?;
    prob.validate()?;

    let setup = Instant::now();
    let (scaled, info) = if cfg.scaling {
        precondition(prob, cfg.ruiz_iters, cfg.pock_chambolle_alpha)
    } else {
        (prob.clone(), ScalingInfo::identity(prob.m(), prob.n()))
    };
    let setup_seconds = setup.elapsed().as_secs_f64();

    let clock = Instant::now();
    let at = scaled.a.transpose();
    let power = PowerOptions {
        seed: cfg.seed,
        ..cfg.power
    };
    let est = spectral::estimate_parts(&scaled.a, &at, &scaled.q, cfg.spectral_safety, power);
    let sigma0 = match cfg.sigma0 {
        Sigma0Rule::Fixed(s) => s,
        // the primal splittings weight the constraint the other way round
        Sigma0Rule::Auto if variant == Variant::Dual => auto_sigma0(&scaled),
        Sigma0Rule::Auto => 1.0 / auto_sigma0(&scaled),
    };
    let ctx = RunContext {
        original: prob,
        original_at: prob.a.transpose(),
        info: &info,
        cfg,
        clock,
        estimates: est,
        variant,
        setup_seconds,
    };
    match variant {
        Variant::Dual => run(
            DualSplitting::with_transpose(&scaled, at, &est),
            sigma0,
            ctx,
        ),
        Variant::Primal1 => run(
            Primal1Splitting::with_transpose(&scaled, at, &est),
            sigma0,
            ctx,
        ),
        Variant::Primal2 => run(
            Primal2Splitting::with_transpose(&scaled, at, &est),
            sigma0,
            ctx,
        ),
    }
}

struct RunContext<'a> {
    original: &'a CcqpProblem,
    original_at: CsrMatrix,
    info: &'a ScalingInfo,
    cfg: &'a SolverConfig,
    clock: Instant,
    estimates: SpectralEstimates,
    variant: Variant,
    setup_seconds: f64,
}

impl RunContext<'_> {
    fn evaluate(&self, scaled: &IterateBundle) -> Result<(IterateBundle, KktMeasures)> {
        let u = unscale_solution(self.info, scaled)?;
        let meas = kkt_residuals_with(&u, self.original, &self.original_at)?;
        Ok((u, meas))
    }
}

fn run<S: Splitting>(mut split: S, sigma0: f64, ctx: RunContext<'_>) -> Result<SolveOutput> {
    let cfg = ctx.cfg;
    let (m, n) = (ctx.original.m(), ctx.original.n());
    let mut rs = RestartState::new(cfg);
    let mut sigma = sigma0;
    let mut trace = Vec::new();
    let record = |rs: &RestartState,
                  sigma: f64,
                  merit: f64,
                  meas: &KktMeasures,
                  trace: &mut Vec<TraceRecord>| {
        trace.push(TraceRecord {
            k: rs.k,
            r: rs.r,
            t: rs.t,
            sigma,
            r_tilde: merit,
            eta_gap: meas.eta_gap,
            eta_p: meas.eta_p,
            eta_d: meas.eta_d,
            seconds: ctx.clock.elapsed().as_secs_f64(),
        });
    };

    // the origin is checked before any work
    let (mut best, mut meas) = ctx.evaluate(&IterateBundle::zeros(m, n))?;
    record(&rs, sigma, f64::NAN, &meas, &mut trace);
    let mut checked_at = 0;
    let mut merit = f64::NAN;

    let status = loop {
        if meas.meets(cfg.tol) && checked_at == rs.k {
            break Status::Optimal;
        }
        if ctx.clock.elapsed().as_secs_f64() >= cfg.time_limit {
            break Status::TimeLimit;
        }
        if rs.k >= cfg.max_iter {
            break Status::IterLimit;
        }

        let merit_sq = split.step(sigma, rs.t)?;
        if !merit_sq.is_finite() {
            let block = split.candidate().non_finite_block().unwrap_or("merit");
            return Err(Error::NumericalBreakdown {
                block,
                iteration: rs.k + 1,
            });
        }
        merit = merit_sq.sqrt();
        let decision = rs.observe(merit, cfg);
        let restart = cfg.restarts_enabled && matches!(decision, RestartDecision::Restart(_));

        if restart || rs.k.is_multiple_of(cfg.check_interval) {
            (best, meas) = ctx.evaluate(&split.candidate())?;
            checked_at = rs.k;
            record(&rs, sigma, merit, &meas, &mut trace);
            if meas.meets(cfg.tol) {
                continue;
            }
        }

        if restart {
            let beta = rs.on_restart(cfg);
            if cfg.sigma_update_enabled {
                let theta = split.sigma_coefficients();
                sigma = sigma_update(theta, split.sigma_lambda(), sigma, beta, cfg);
            }
            split.restart();
            log::debug!("restart {} at k = {}, sigma = {sigma:e}", rs.r, rs.k);
        }
    };

    if status != Status::Optimal && checked_at != rs.k {
        (best, meas) = ctx.evaluate(&split.candidate())?;
        record(&rs, sigma, merit, &meas, &mut trace);
    }

    Ok(SolveOutput {
        solution: best,
        report: meas.into_report(status),
        trace,
        iterations: rs.k,
        restarts: rs.r,
        sigma,
        estimates: ctx.estimates,
        variant: ctx.variant,
        setup_seconds: ctx.setup_seconds,
        solve_seconds: ctx.clock.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Bounds, CompositeTerm, PsdOperator};

    fn scalar_qp(c: f64, lo: f64, hi: f64) -> CcqpProblem {
        CcqpProblem::new(
            PsdOperator::Sparse(CsrMatrix::identity(1)),
            CsrMatrix::identity(1),
            vec![c],
            Bounds::new(vec![lo], vec![hi]).unwrap(),
            CompositeTerm::free(1),
        )
        .unwrap()
    }

    #[test]
    fn scalar_qp_interior_optimum() {
        let out = solve(&scalar_qp(-1.0, 0.0, 10.0), &SolverConfig::default()).unwrap();
        assert_eq!(out.report.status, Status::Optimal);
        assert!((out.solution.x[0] - 1.0).abs() < 1e-6);
        assert!((out.report.primal_obj + 0.5).abs() < 1e-8);
        assert!(out.report.eta_gap <= 1e-8 && out.report.eta_p <= 1e-8 && out.report.eta_d <= 1e-8);
    }

    #[test]
    fn scalar_qp_active_bound() {
        let out = solve(&scalar_qp(0.0, 1.0, 2.0), &SolverConfig::default()).unwrap();
        assert_eq!(out.report.status, Status::Optimal);
        assert!((out.solution.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trivial_problem_stops_before_iterating() {
        let p = CcqpProblem::new(
            PsdOperator::zero(2),
            CsrMatrix::identity(2),
            vec![0.0; 2],
            Bounds::new(vec![-1.0; 2], vec![1.0; 2]).unwrap(),
            CompositeTerm::free(2),
        )
        .unwrap();
        let out = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(out.report.status, Status::Optimal);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn iteration_limit_is_a_status() {
        let cfg = SolverConfig {
            max_iter: 3,
            ..Default::default()
        };
        let out = solve(&scalar_qp(-1.0, 0.0, 10.0), &cfg).unwrap();
        assert_eq!(out.report.status, Status::IterLimit);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn primal_variants_agree_on_scalar_qp() {
        for v in [Variant::Primal1, Variant::Primal2] {
            let out =
                solve_primal_variant(&scalar_qp(-1.0, 0.0, 10.0), &SolverConfig::default(), v)
                    .unwrap();
            assert_eq!(out.report.status, Status::Optimal, "{v}");
            assert!(
                (out.solution.x[0] - 1.0).abs() < 1e-6,
                "{v}: {:?}",
                out.solution.x
            );
        }
    }

    #[test]
    fn sigma0_rule() {
        let p = scalar_qp(-2.0, 0.0, 10.0);
        assert_eq!(auto_sigma0(&p), 5.0);
        let p = scalar_qp(0.0, 0.0, 10.0);
        assert_eq!(auto_sigma0(&p), 1.0);
    }
}
