//! Trace analytics: convergence order, sufficient/strong decrease constants,
//! path length against its Łojasiewicz bound, and linear-rate checks.

use serde::Serialize;

use crate::problems::Problem;
use crate::solvers::{Trace, TraceRow};
use crate::{Error, Result};

/// Errors below this are at the floating-point floor and excluded from fits.
pub const ERROR_FLOOR: f64 = 1e2 * f64::EPSILON;
pub const DEFAULT_TAIL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateClass {
    Sublinear,
    Linear,
    Superlinear,
    Quadratic,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub order_q: f64,
    pub rate_c: f64,
    /// Index range `[start, end)` of the fitted entries.
    pub window: (usize, usize),
    pub fit_residual: f64,
    /// Geometric mean of `e_{k+1}/e_k` over the window.
    pub mean_ratio: f64,
    pub classification: RateClass,
}

/// Fit `log e_{k+1} = q log e_k + log c` over the last `tail` usable entries.
///
/// The sequence is cut at the first entry below [`ERROR_FLOOR`].
pub fn fit_rate(errors: &[f64], tail: usize) -> Result<RateReport> {
    if tail < 4 {
        return Err(Error::InvalidInput(format!("tail window must hold at least 4 entries, got {tail}")));
    }
    if let Some(bad) = errors.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(Error::InvalidInput(format!("errors must be non-negative and finite, got {bad}")));
    }
    let usable = errors.iter().position(|e| *e < ERROR_FLOOR).unwrap_or(errors.len());
    if usable < 4 {
        return Err(Error::InsufficientData { usable, needed: 4 });
    }
    let start = usable.saturating_sub(tail);
    let logs: Vec<f64> = errors[start..usable].iter().map(|e| e.ln()).collect();
    let xs = &logs[..logs.len() - 1];
    let ys = &logs[1..];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let q = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    let log_c = my - q * mx;
    let fit_residual =
        (xs.iter().zip(ys).map(|(x, y)| (y - q * x - log_c).powi(2)).sum::<f64>() / n).sqrt();
    let mean_ratio = ((logs[logs.len() - 1] - logs[0]) / n).exp();
    let rate_c = log_c.exp();
    let classification = if q >= 1.8 {
        RateClass::Quadratic
    } else if q > 1.1 {
        RateClass::Superlinear
    } else if q >= 0.9 && mean_ratio < 1.0 - 1e-3 && rate_c < 1.0 {
        RateClass::Linear
    } else {
        RateClass::Sublinear
    };
    Ok(RateReport { order_q: q, rate_c, window: (start, usable), fit_residual, mean_ratio, classification })
}

/// Łojasiewicz constants feeding the path-length bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LojaParams {
    pub theta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecreaseReport {
    /// `min (f_k - f_{k+1}) / |grad f_k|^2`.
    pub omega_hat: f64,
    /// `min (f_k - f_{k+1}) / (|grad f_k| dist(x_k, x_{k+1}))`.
    pub sigma_hat: f64,
    pub path_length: f64,
    /// `dist(x_first, x_last)`, when points were recorded.
    pub displacement: Option<f64>,
    pub bpl_bound: Option<f64>,
    /// Accepted steps that increased `f`.
    pub violations: usize,
    pub n_used: usize,
}

/// Sufficient and strong decrease constants measured along a trace.
///
/// Step lengths use the manifold distance when the trace recorded points and
/// the tangent step norm otherwise. With `loja` and an oracle `f*`, the bound
/// `(f(x_0) - f*)^(1-theta) / (sigma (1-theta) sqrt(2 mu))` on the path length is
/// also reported.
pub fn measure_decrease(trace: &Trace, p: &Problem, loja: Option<LojaParams>) -> Result<DecreaseReport> {
    let rows = &trace.rows;
    let has_points = rows.iter().all(|r| r.x.is_some());
    if rows.iter().any(|r| !r.f.is_finite() || !r.grad_norm.is_finite()) {
        return Err(Error::IncompleteTrace("trace has non-finite values".into()));
    }
    let step_len = |a: &TraceRow, b: &TraceRow| -> Result<f64> {
        match (&a.x, &b.x) {
            (Some(x), Some(y)) if has_points => p.manifold().dist(x, y),
            _ => Ok(a.step_norm),
        }
    };
    let mut omega = f64::INFINITY;
    let mut sigma = f64::INFINITY;
    let mut path = 0.0;
    let mut violations = 0;
    let mut used = 0;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !a.accepted {
            continue;
        }
        let d = step_len(a, b)?;
        path += d;
        let drop = a.f - b.f;
        if drop < 0.0 {
            violations += 1;
        }
        if a.grad_norm > trace.grad_tol {
            used += 1;
            omega = omega.min(drop / (a.grad_norm * a.grad_norm));
            if d > 0.0 {
                sigma = sigma.min(drop / (a.grad_norm * d));
            }
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData { usable: 0, needed: 1 });
    }
    let displacement = match (&rows[0].x, &trace.last().x) {
        (Some(x), Some(y)) => Some(p.manifold().dist(x, y)?),
        _ => None,
    };
    let bpl_bound = match (loja, p.f_star()) {
        (Some(l), Some(f_star)) if sigma > 0.0 && sigma.is_finite() && l.theta < 1.0 && l.mu > 0.0 => {
            let gap = (rows[0].f - f_star).max(0.0);
            Some(gap.powf(1.0 - l.theta) / (sigma * (1.0 - l.theta) * (2.0 * l.mu).sqrt()))
        }
        _ => None,
    };
    Ok(DecreaseReport {
        omega_hat: omega,
        sigma_hat: sigma,
        path_length: path,
        displacement,
        bpl_bound,
        violations,
        n_used: used,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearRateCheck {
    /// Geometric mean of the f-gap ratios over the tail.
    pub f_ratio: f64,
    pub f_bound: f64,
    pub dist_ratio: Option<f64>,
    pub dist_bound: f64,
    pub pass: bool,
}

/// Compare the tail rates of a converged trace with `1 - 2 omega mu` (f-gap)
/// and its square root (distance), each with 0.02 slack.
pub fn verify_linear_rate(trace: &Trace, f_star: f64, mu: f64, omega: f64) -> Result<LinearRateCheck> {
    if !trace.converged() {
        return Err(Error::NotApplicable(format!("trace ended with {:?}", trace.termination)));
    }
    let it = trace.iterate_rows();
    // stop at the floating-point floor of either sequence
    let usable: Vec<_> = it
        .iter()
        .take_while(|r| r.f - f_star > 0.0 && r.dist_s.is_none_or(|d| d > ERROR_FLOOR))
        .collect();
    if usable.len() < 2 {
        return Err(Error::NotApplicable("fewer than two usable iterates".into()));
    }
    let window = &usable[usable.len().saturating_sub(DEFAULT_TAIL + 1)..];
    let m = (window.len() - 1) as f64;
    let first = window[0];
    let last = window[window.len() - 1];
    let f_ratio = ((last.f - f_star) / (first.f - f_star)).powf(1.0 / m);
    let dist_ratio = match (first.dist_s, last.dist_s) {
        (Some(a), Some(b)) => Some((b / a).powf(1.0 / m)),
        _ => None,
    };
    let base = (1.0 - 2.0 * omega * mu).max(0.0);
    let f_bound = base + 0.02;
    let dist_bound = base.sqrt() + 0.02;
    let pass = f_ratio <= f_bound && dist_ratio.is_none_or(|r| r <= dist_bound);
    Ok(LinearRateCheck { f_ratio, f_bound, dist_ratio, dist_bound, pass })
}
