use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::PowerOptions;

/// How the initial penalty parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma0Rule {
    /// `||b|| / ||c||` on the data being solved, falling back to 1.
    Auto,
    Fixed(f64),
}

/// Which splitting drives the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    Dual,
    /// HPR on the primal reformulation with a slack `s = A x`.
    Primal1,
    /// HPR on the primal reformulation with slacks `s = A x`, `v = x`.
    Primal2,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Dual => "dual",
            Variant::Primal1 => "primal1",
            Variant::Primal2 => "primal2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(Variant::Dual),
            "primal1" => Ok(Variant::Primal1),
            "primal2" => Ok(Variant::Primal2),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub time_limit: f64,
    pub max_iter: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Replacement for `alpha3` once the restart ratio falls to `tighten_ratio`.
    pub alpha3_tight: f64,
    pub tighten_ratio: f64,
    pub sigma0: Sigma0Rule,
    /// Iterations between termination checks; restarts always check.
    pub check_interval: usize,
    pub sigma_bracket: (f64, f64),
    pub golden_tol: f64,
    pub restarts_enabled: bool,
    pub sigma_update_enabled: bool,
    pub scaling: bool,
    pub ruiz_iters: usize,
    pub pock_chambolle_alpha: f64,
    pub power: PowerOptions,
    pub spectral_safety: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            time_limit: 3600.0,
            max_iter: usize::MAX,
            alpha1: 0.2,
            alpha2: 0.8,
            alpha3: 0.5,
            alpha3_tight: 0.2,
            tighten_ratio: 0.1,
            sigma0: Sigma0Rule::Auto,
            check_interval: 100,
            sigma_bracket: (1e-9, 1e9),
            golden_tol: 1e-6,
            restarts_enabled: true,
            sigma_update_enabled: true,
            scaling: true,
            ruiz_iters: 10,
            pock_chambolle_alpha: 1.0,
            power: PowerOptions::default(),
            spectral_safety: 1.002,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return bad(format!(
                "time limit must be positive, got {}",
                self.time_limit
            ));
        }
        if !(0.0 < self.alpha1 && self.alpha1 < self.alpha2 && self.alpha2 < 1.0) {
            return bad(format!(
                "restart constants need 0 < alpha1 < alpha2 < 1, got {} and {}",
                self.alpha1, self.alpha2
            ));
        }
        for (name, v) in [("alpha3", self.alpha3), ("alpha3_tight", self.alpha3_tight)] {
            if !(0.0 < v && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.check_interval == 0 {
            return bad("check interval must be at least 1".into());
        }
        let (lo, hi) = self.sigma_bracket;
        if !(0.0 < lo && lo < hi && hi.is_finite()) {
            return bad(format!("invalid sigma bracket [{lo}, {hi}]"));
        }
        if let Sigma0Rule::Fixed(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma0 must be positive and finite, got {s}"));
            }
        }
        if self.spectral_safety.is_nan() || self.spectral_safety < 1.0 {
            return bad(format!(
                "spectral safety factor must be at least 1, got {}",
                self.spectral_safety
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_constants() {
        let cfg = SolverConfig {
            alpha1: 0.9,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn variant_round_trip() {
        for v in [Variant::Dual, Variant::Primal1, Variant::Primal2] {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("primal3".parse::<Variant>().is_err());
    }
}
