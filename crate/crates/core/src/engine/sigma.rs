//! Penalty parameter update between outer loops.

use super::SolverConfig;

/// `f(sigma) = theta1 sigma + theta2 / sigma + sigma^2 theta3 / (1 + lambda_q sigma)`
pub fn sigma_objective(theta: [f64; 3], lambda_q: f64, sigma: f64) -> f64 {
    theta[0] * sigma + theta[1] / sigma + sigma * sigma * theta[2] / (1.0 + lambda_q * sigma)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimizer of a unimodal `f` over
/// `log(sigma)` in `[ln lo, ln hi]`, stopping once the bracket is narrower
/// than `rel_tol` in log space (about `rel_tol` relative in `sigma`).
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let g = |s: f64| f(s.exp());
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while b - a > rel_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d);
        }
    }
    (0.5 * (a + b)).exp()
}

/// Minimizer of [`sigma_objective`] after flooring `theta1` and `theta2`.
/// Without the cubic-like term the minimizer is `sqrt(theta2 / theta1)`.
pub fn minimize_sigma(theta: [f64; 3], lambda_q: f64, cfg: &SolverConfig) -> f64 {
    let theta = [theta[0].max(1e-12), theta[1].max(1e-12), theta[2].max(0.0)];
    let (lo, hi) = cfg.sigma_bracket;
    if theta[2] == 0.0 {
        return (theta[1] / theta[0]).sqrt().clamp(lo, hi);
    }
    golden_section(
        |s| sigma_objective(theta, lambda_q, s),
        lo,
        hi,
        cfg.golden_tol,
    )
}

/// Log-space smoothing `exp(beta ln sigma_new + (1 - beta) ln sigma_old)`.
pub fn smooth_sigma(sigma_new: f64, sigma_old: f64, beta: f64) -> f64 {
    (beta * sigma_new.ln() + (1.0 - beta) * sigma_old.ln()).exp()
}

/// The complete update. Non-finite coefficients leave `sigma` unchanged.
pub fn sigma_update(
    theta: [f64; 3],
    lambda_q: f64,
    sigma: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> f64 {
    if !theta.iter().all(|t| t.is_finite()) {
        log::warn!("non-finite penalty coefficients {theta:?}; keeping sigma = {sigma:e}");
        return sigma;
    }
    let next = smooth_sigma(minimize_sigma(theta, lambda_q, cfg), sigma, beta);
    if next.is_finite() && next > 0.0 {
        next
    } else {
        log::warn!("penalty update produced {next}; keeping sigma = {sigma:e}");
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_without_theta3() {
        let cfg = SolverConfig::default();
        assert_eq!(minimize_sigma([4.0, 1.0, 0.0], 0.0, &cfg), 0.5);
    }

    #[test]
    fn golden_matches_stationary_point() {
        // with lambda_q = 0, f' = theta1 - theta2 / s^2 + 2 s theta3
        let cfg = SolverConfig::default();
        let s = minimize_sigma([1.0, 1.0, 1.0], 0.0, &cfg);
        let grad = 1.0 - 1.0 / (s * s) + 2.0 * s;
        assert!(grad.abs() < 1e-5, "gradient {grad} at {s}");
    }

    #[test]
    fn saturates_at_bracket_edge() {
        let cfg = SolverConfig::default();
        let s = minimize_sigma([1e-12, 1e30, 1e-300], 0.0, &cfg);
        assert!((s / 1e9 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn smoothing_at_first_restart() {
        let beta = (-1.0f64).exp();
        let s = smooth_sigma(std::f64::consts::E, 1.0, beta);
        assert!((s - 1.4447).abs() < 1e-4);
    }

    #[test]
    fn non_finite_keeps_sigma() {
        let cfg = SolverConfig::default();
        assert_eq!(sigma_update([f64::NAN, 1.0, 0.0], 0.0, 3.0, 0.5, &cfg), 3.0);
    }

    #[test]
    fn floors_negative_theta1() {
        let cfg = SolverConfig::default();
        let s = minimize_sigma([-5.0, 1e-12, 0.0], 0.0, &cfg);
        assert_eq!(s, 1.0);
    }
}
