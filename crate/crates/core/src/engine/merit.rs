//! Squared semi-norms of the preconditioners that define the restart merit.

use crate::error::{Error, Result};
use crate::linalg::{dot, sub};
use crate::problem::CcqpProblem;
use crate::spectral::SpectralEstimates;

use super::IterateBundle;

/// Sums the terms of a quadratic form known to be PSD. Tiny negative totals
/// from cancellation are clamped to zero; anything clearly negative means the
/// spectral estimates were too small. NaN passes through so the caller can
/// locate the offending block.
///
/// `reference` is the same form's magnitude at the iterate the difference was
/// taken from. Rounding in `u - bar u` perturbs the total by roughly
/// `eps * sqrt(scale * reference)`, which dominates once the step stalls.
pub(crate) fn psd_sum(terms: &[f64], reference: f64) -> Result<f64> {
    let total: f64 = terms.iter().sum();
    if total.is_nan() || total >= 0.0 {
        return Ok(total);
    }
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let noise = 1e3 * f64::EPSILON * (scale * reference.max(0.0)).sqrt();
    if total < -(1e-9 * scale + noise) {
        return Err(Error::IndefiniteMetric {
            value: total,
            scale,
        });
    }
    Ok(0.0)
}

/// Products of a difference `d = (dy, dw, dz, dx)` needed by the dual metric.
pub(crate) struct DualDiff<'a> {
    pub dy: &'a [f64],
    pub dw: &'a [f64],
    pub dx: &'a [f64],
    /// `A^T dy`
    pub at_dy: &'a [f64],
    /// `Q dw`
    pub q_dw: &'a [f64],
    /// `<A^T dy, Q A^T dy>`
    pub at_dy_q_at_dy: f64,
    /// Magnitude of the form at the originating iterate, see [`psd_sum`].
    pub reference: f64,
}

pub(crate) fn dual_metric_sq(
    d: &DualDiff<'_>,
    sigma: f64,
    lambda_a: f64,
    lambda_q: f64,
) -> Result<f64> {
    let mut cross = 0.0; // ||A^T dy - Q dw||^2
    let mut mixed = 0.0; // <A^T dy - Q dw, dx>
    for i in 0..d.dx.len() {
        let r = d.at_dy[i] - d.q_dw[i];
        cross += r * r;
        mixed += r * d.dx[i];
    }
    let terms = [
        sigma * cross,
        sigma * lambda_a * dot(d.dy, d.dy),
        -sigma * dot(d.at_dy, d.at_dy),
        sigma * lambda_q * dot(d.dw, d.q_dw),
        -sigma * dot(d.q_dw, d.q_dw),
        sigma * sigma / (1.0 + sigma * lambda_q) * d.at_dy_q_at_dy,
        2.0 * mixed,
        dot(d.dx, d.dx) / sigma,
    ];
    psd_sum(&terms, d.reference)
}

/// `||d||_M^2` for the dual method, evaluated from operator products without
/// forming `M`. Only `y`, `w` and `x` of `d` are read; the `z` block carries no
/// weight.
pub fn m_norm_sq(
    d: &IterateBundle,
    prob: &CcqpProblem,
    est: &SpectralEstimates,
    sigma: f64,
) -> Result<f64> {
    let (m, n) = (prob.m(), prob.n());
    for (context, expected, got) in [
        ("metric dy", m, d.y.len()),
        ("metric dw", n, d.w.len()),
        ("metric dx", n, d.x.len()),
    ] {
        if expected != got {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
    }
    let mut at_dy = vec![0.0; n];
    prob.a.transpose().mul_vec(&d.y, &mut at_dy);
    let q_dw = prob.q.apply(&d.w)?;
    let q_at_dy = prob.q.apply(&at_dy)?;
    dual_metric_sq(
        &DualDiff {
            dy: &d.y,
            dw: &d.w,
            dx: &d.x,
            at_dy: &at_dy,
            q_dw: &q_dw,
            at_dy_q_at_dy: dot(&at_dy, &q_at_dy),
            reference: 0.0,
        },
        sigma,
        est.lambda_a,
        est.lambda_q,
    )
}

/// Metric of the first primal splitting, on `(dx, dy)`.
pub(crate) fn primal1_metric_sq(
    dx: &[f64],
    dy: &[f64],
    a_dx: &[f64],
    q_dx: &[f64],
    sigma: f64,
    tau: f64,
    reference: f64,
) -> Result<f64> {
    psd_sum(
        &[
            tau * dot(dx, dx),
            -dot(dx, q_dx),
            -2.0 * dot(a_dx, dy),
            dot(dy, dy) / sigma,
        ],
        reference,
    )
}

/// Metric of the second primal splitting, on `(dx, dv, dy, dt)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn primal2_metric_sq(
    dx: &[f64],
    dv: &[f64],
    dy: &[f64],
    dt: &[f64],
    a_dx: &[f64],
    q_dv: &[f64],
    sigma: f64,
    lambda_a: f64,
    lambda_q: f64,
    reference: f64,
) -> Result<f64> {
    psd_sum(
        &[
            sigma * (1.0 + lambda_a) * dot(dx, dx),
            -2.0 * dot(a_dx, dy),
            -2.0 * dot(dx, dt),
            (dot(dy, dy) + dot(dt, dt)) / sigma,
            lambda_q * dot(dv, dv),
            -dot(dv, q_dv),
        ],
        reference,
    )
}

/// `u - v` blockwise on `y`, `w`, `z`, `x`; cached products are differenced too.
pub fn difference(u: &IterateBundle, v: &IterateBundle) -> IterateBundle {
    IterateBundle {
        y: sub(&u.y, &v.y),
        w: sub(&u.w, &v.w),
        z: sub(&u.z, &v.z),
        x: sub(&u.x, &v.x),
        qw: sub(&u.qw, &v.qw),
        ax: sub(&u.ax, &v.ax),
        aty: sub(&u.aty, &v.aty),
    }
}
