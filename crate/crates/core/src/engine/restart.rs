//! Adaptive restart bookkeeping.
//!
//! The merit `R_{r,t} = ||u^{r,t} - bar u^{r,t+1}||_M` is observed after every
//! inner step. The first observation of an outer loop is its reference value.

use super::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartReason {
    /// `R_new <= alpha1 * R_first`
    SufficientDecay,
    /// `R_new <= alpha2 * R_first` while `R_new > R_prev`
    NoLocalProgress,
    /// `t >= alpha3 * k`
    LongInnerLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartDecision {
    Continue,
    Restart(RestartReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartState {
    /// Outer loop counter.
    pub r: usize,
    /// Inner steps taken in the current loop.
    pub t: usize,
    /// Total steps taken.
    pub k: usize,
    /// Merit of the first step of the current loop.
    pub r_first: Option<f64>,
    /// Most recent merit.
    pub r_prev: f64,
    /// Last merit of the first loop; set at the first restart.
    pub r_baseline: Option<f64>,
    /// Current long-loop constant, tightened once the merit has decayed enough.
    pub alpha3: f64,
}

impl RestartState {
    pub fn new(cfg: &SolverConfig) -> Self {
        RestartState {
            r: 0,
            t: 0,
            k: 0,
            r_first: None,
            r_prev: f64::NAN,
            r_baseline: None,
            alpha3: cfg.alpha3,
        }
    }

    /// Counts one inner step with merit `merit` and decides whether to restart.
    pub fn observe(&mut self, merit: f64, cfg: &SolverConfig) -> RestartDecision {
        self.t += 1;
        self.k += 1;
        let decision = if self.r_first.is_none() {
            self.r_first = Some(merit);
            RestartDecision::Continue
        } else {
            check_restart(self, merit, cfg)
        };
        self.r_prev = merit;
        decision
    }

    /// Closes the current loop and returns the smoothing weight
    /// `beta = exp(-R_last / R_baseline)` for the penalty update.
    pub fn on_restart(&mut self, cfg: &SolverConfig) -> f64 {
        let last = self.r_prev;
        let baseline = *self.r_baseline.get_or_insert(last);
        let ratio = if baseline > 0.0 { last / baseline } else { 0.0 };
        if ratio <= cfg.tighten_ratio {
            self.alpha3 = cfg.alpha3_tight;
        }
        self.r += 1;
        self.t = 0;
        self.r_first = None;
        (-ratio).exp()
    }
}

/// Evaluates the three restart tests for a new merit value. `rs.t` and `rs.k`
/// already count the step that produced `r_new`; `rs.r_prev` is the merit of
/// the step before it.
pub fn check_restart(rs: &RestartState, r_new: f64, cfg: &SolverConfig) -> RestartDecision {
    let Some(first) = rs.r_first else {
        return RestartDecision::Continue;
    };
    if r_new <= cfg.alpha1 * first {
        RestartDecision::Restart(RestartReason::SufficientDecay)
    } else if r_new <= cfg.alpha2 * first && r_new > rs.r_prev {
        RestartDecision::Restart(RestartReason::NoLocalProgress)
    } else if rs.t as f64 >= rs.alpha3 * rs.k as f64 {
        RestartDecision::Restart(RestartReason::LongInnerLoop)
    } else {
        RestartDecision::Continue
    }
}
