//! Sampled estimates of the landscape constants (PL, EB, QG, RSI,
//! Łojasiewicz), the Morse–Bott structure check, and cross-checks of the
//! implications between them.
//!
//! Estimates are infima of the defining ratios over points drawn uniformly
//! from an annulus around a center, so they over-estimate the true constant
//! of that region and approach it as the sample grows.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::linalg::{range_basis, rank_threshold, SortedEigen};
use crate::problems::{Problem, Smoothness, SolutionSet};
use crate::{Error, Result};

/// Estimates at or above this count as "the property holds".
pub const HOLD_THRESHOLD: f64 = 0.1;
pub const DEFAULT_SLACK: f64 = 0.9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub r_inner: f64,
    pub r_outer: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Samples this close to `S` (in value) are skipped.
    #[serde(default = "default_eps_f")]
    pub eps_f: f64,
}

fn default_samples() -> usize {
    10_000
}

fn default_eps_f() -> f64 {
    1e-14
}

impl RegionSpec {
    pub fn new(center: &[f64], r_inner: f64, r_outer: f64, n_samples: usize, seed: u64) -> Self {
        Self { center: center.to_vec(), r_inner, r_outer, n_samples, seed, eps_f: default_eps_f() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_inner >= 0.0 && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 <= r_inner < r_outer, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        if self.n_samples < 100 {
            return Err(Error::InvalidInput(format!("need at least 100 samples, got {}", self.n_samples)));
        }
        if !(self.eps_f >= 0.0) {
            return Err(Error::InvalidInput("eps_f must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Pl,
    Eb,
    Qg,
    Rsi,
    Loja,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionEstimate {
    pub kind: ConditionKind,
    pub mu_hat: f64,
    pub theta_hat: Option<f64>,
    pub argmin_sample: Vec<f64>,
    pub n_used: usize,
}

/// Draw `n_samples` points with tangent offsets uniform in the annulus
/// `r_inner <= |v| <= r_outer` around the center, mapped by the exponential.
pub fn sample_region(p: &Problem, region: &RegionSpec) -> Result<Vec<Point>> {
    region.validate()?;
    let m = p.manifold();
    let center = DVector::from_column_slice(&region.center);
    m.check_point(&center)?;
    let basis = m.tangent_basis(&center);
    let d = m.dim();
    if d == 0 {
        return Err(Error::EmptyRegion("zero-dimensional search space".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(region.seed);
    let (a, b) = (region.r_inner.powi(d as i32), region.r_outer.powi(d as i32));
    let mut out = Vec::with_capacity(region.n_samples);
    while out.len() < region.n_samples {
        let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let r = (a + rng.random::<f64>() * (b - a)).powf(1.0 / d as f64);
        let v = &basis * (dir * (r / norm));
        out.push(m.exp(&center, &v)?);
    }
    Ok(out)
}

fn oracle(p: &Problem) -> Result<&dyn SolutionSet> {
    p.oracle()
        .ok_or_else(|| Error::Precondition(format!("problem `{}` has no solution-set oracle", p.name())))
}

/// Per-sample quantities shared by all estimators.
struct Sample {
    x: Point,
    gap: f64,
    grad_norm: f64,
    dist: f64,
    /// `<grad f(x), -log_x(proj(x))>`.
    secant: f64,
}

fn evaluate(p: &Problem, region: &RegionSpec) -> Result<Vec<Sample>> {
    let o = oracle(p)?;
    let f_star = o.f_star();
    sample_region(p, region)?
        .into_iter()
        .map(|x| {
            let g = p.grad(&x);
            let proj = o.project(&x);
            let toward = p.manifold().log(&x, &proj)?;
            Ok(Sample { gap: p.value(&x) - f_star, grad_norm: g.norm(), dist: o.dist(&x), secant: -g.dot(&toward), x })
        })
        .collect()
}

fn infimum(
    kind: ConditionKind,
    samples: &[Sample],
    keep: impl Fn(&Sample) -> bool,
    ratio: impl Fn(&Sample) -> f64,
) -> Result<ConditionEstimate> {
    let mut best: Option<(f64, &Sample)> = None;
    let mut used = 0;
    for s in samples.iter().filter(|s| keep(s)) {
        used += 1;
        let r = ratio(s);
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, s));
        }
    }
    let (mu, arg) = best.ok_or_else(|| Error::EmptyRegion(format!("no usable samples for {kind:?}")))?;
    Ok(ConditionEstimate {
        kind,
        mu_hat: mu.max(0.0),
        theta_hat: None,
        argmin_sample: arg.x.iter().copied().collect(),
        n_used: used,
    })
}

fn pl_from(samples: &[Sample], eps_f: f64) -> Result<ConditionEstimate> {
    infimum(ConditionKind::Pl, samples, |s| s.gap >= eps_f, |s| s.grad_norm.powi(2) / (2.0 * s.gap))
}

fn eb_from(samples: &[Sample], eps_f: f64) -> Result<ConditionEstimate> {
    infimum(ConditionKind::Eb, samples, |s| s.dist >= eps_f.sqrt(), |s| s.grad_norm / s.dist)
}

fn qg_from(samples: &[Sample], eps_f: f64) -> Result<ConditionEstimate> {
    infimum(ConditionKind::Qg, samples, |s| s.dist >= eps_f.sqrt(), |s| 2.0 * s.gap / (s.dist * s.dist))
}

fn rsi_from(samples: &[Sample], eps_f: f64) -> Result<ConditionEstimate> {
    infimum(ConditionKind::Rsi, samples, |s| s.dist >= eps_f.sqrt(), |s| s.secant / (s.dist * s.dist))
}

fn loja_from(samples: &[Sample], eps_f: f64) -> Result<ConditionEstimate> {
    let pts: Vec<(f64, f64, &Sample)> = samples
        .iter()
        .filter(|s| s.gap >= eps_f && s.grad_norm > 0.0)
        .map(|s| (s.gap.ln(), s.grad_norm.ln(), s))
        .collect();
    if pts.len() < 2 {
        return Err(Error::EmptyRegion("no usable samples for the Łojasiewicz fit".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if (sxx / n).sqrt() < 1e-6 {
        return Err(Error::IllConditionedFit("samples lie on a single level set".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let theta = sxy / sxx;
    let intercept = my - theta * mx;
    // the sample closest to the fitted curve from below
    let arg = pts
        .iter()
        .min_by(|a, b| (a.1 - theta * a.0).total_cmp(&(b.1 - theta * b.0)))
        .map(|p| p.2)
        .expect("non-empty");
    Ok(ConditionEstimate {
        kind: ConditionKind::Loja,
        mu_hat: (2.0 * intercept).exp() / 2.0,
        theta_hat: Some(theta.clamp(0.0, 1.0 - 1e-12)),
        argmin_sample: arg.x.iter().copied().collect(),
        n_used: pts.len(),
    })
}

/// `inf |grad f|^2 / (2 (f - f*))`.
pub fn estimate_pl(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimate> {
    pl_from(&evaluate(p, region)?, region.eps_f)
}

/// `inf |grad f| / dist(x, S)`.
pub fn estimate_eb(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimate> {
    eb_from(&evaluate(p, region)?, region.eps_f)
}

/// `inf 2 (f - f*) / dist(x, S)^2`.
pub fn estimate_qg(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimate> {
    qg_from(&evaluate(p, region)?, region.eps_f)
}

/// `inf <grad f(x), x - proj(x)> / dist(x, S)^2` (restricted secant inequality).
pub fn estimate_rsi(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimate> {
    rsi_from(&evaluate(p, region)?, region.eps_f)
}

/// Least-squares fit of `log |grad f| = theta log(f - f*) + log(2 mu) / 2`.
pub fn fit_loja_exponent(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimate> {
    loja_from(&evaluate(p, region)?, region.eps_f)
}

/// All estimates on one shared sample. The exponent fit is `None` when the
/// samples do not spread across level sets.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEstimates {
    pub pl: ConditionEstimate,
    pub eb: ConditionEstimate,
    pub qg: ConditionEstimate,
    pub rsi: ConditionEstimate,
    pub loja: Option<ConditionEstimate>,
}

impl ConditionEstimates {
    pub fn as_list(&self) -> Vec<ConditionEstimate> {
        let mut out = vec![self.pl.clone(), self.eb.clone(), self.qg.clone(), self.rsi.clone()];
        out.extend(self.loja.clone());
        out
    }
}

pub fn estimate_all(p: &Problem, region: &RegionSpec) -> Result<ConditionEstimates> {
    let samples = evaluate(p, region)?;
    let eps = region.eps_f;
    let loja = match loja_from(&samples, eps) {
        Ok(e) => Some(e),
        Err(Error::IllConditionedFit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ConditionEstimates {
        pl: pl_from(&samples, eps)?,
        eb: eb_from(&samples, eps)?,
        qg: qg_from(&samples, eps)?,
        rsi: rsi_from(&samples, eps)?,
        loja,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MbReport {
    pub anchor: Vec<f64>,
    /// Hessian eigenvalues on the tangent space, largest first.
    pub eigenvalues: Vec<f64>,
    pub numerical_rank_d: usize,
    /// Smallest of the top `d` eigenvalues.
    pub mu_mb: f64,
    pub kernel_dim: usize,
    pub rank_constant_along_s: bool,
    pub probe_ranks: Vec<usize>,
    /// Largest principal angle between the Hessian kernel and the tangent
    /// space of `S` (estimated from the oracle's projection).
    pub tangent_alignment_err: f64,
    pub dim_s: usize,
    pub holds: bool,
}

/// Radius of the perturbations projected back onto `S` when probing rank.
const PROBE_RADIUS: f64 = 0.05;
const ALIGNMENT_TOL: f64 = 1e-4;

fn tangent_hessian(p: &Problem, x: &Point) -> Result<(DMatrix<f64>, SortedEigen)> {
    let b = p.manifold().tangent_basis(x);
    let h = b.transpose() * p.hess(x)? * &b;
    let eig = SortedEigen::new(&h);
    Ok((b, eig))
}

fn numerical_rank(eig: &SortedEigen) -> usize {
    let cut = rank_threshold(eig.norm());
    eig.values.iter().filter(|l| l.abs() > cut).count()
}

/// Morse–Bott check at a point of `S`: Hessian rank at the anchor and at
/// nearby points of `S`, and alignment of its kernel with `T S`.
pub fn check_mb(p: &Problem, anchor: &Point, n_probe: usize, seed: u64) -> Result<MbReport> {
    if !p.smoothness().has_hessian() {
        return Err(Error::Precondition(format!("problem `{}` has no Hessian", p.name())));
    }
    let o = oracle(p)?;
    p.manifold().check_point(anchor)?;
    let d0 = o.dist(anchor);
    if d0 > 1e-8 {
        return Err(Error::Precondition(format!("anchor is at distance {d0:e} from S")));
    }
    let m = p.manifold();
    let (basis, eig) = tangent_hessian(p, anchor)?;
    let n = eig.values.len();
    let rank = numerical_rank(&eig);
    let mut eigenvalues: Vec<f64> = eig.values.iter().copied().collect();
    eigenvalues.reverse();
    let mu_mb = if rank > 0 { eigenvalues[rank - 1] } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe_ranks = Vec::with_capacity(n_probe);
    for _ in 0..n_probe {
        let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = &basis * (c.normalize() * PROBE_RADIUS * rng.random::<f64>());
        let y = o.project(&m.exp(anchor, &v)?);
        probe_ranks.push(numerical_rank(&tangent_hessian(p, &y)?.1));
    }
    let rank_constant_along_s = probe_ranks.iter().all(|r| *r == rank);

    // T S = range of the projection's derivative at the anchor
    let h = 1e-6;
    let jac = DMatrix::from_columns(
        &(0..n)
            .map(|i| {
                let e = basis.column(i).into_owned() * h;
                let plus = o.project(&m.retract(anchor, &e)?);
                let minus = o.project(&m.retract(anchor, &(-e))?);
                Ok(basis.transpose() * (plus - minus) / (2.0 * h))
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let ts = range_basis(&jac, 1e-3);
    let kernel = eig.vectors.columns(0, n - rank).into_owned();
    let tangent_alignment_err = if kernel.ncols() != ts.ncols() {
        std::f64::consts::FRAC_PI_2
    } else if kernel.ncols() == 0 {
        0.0
    } else {
        let resid = &kernel - &ts * (ts.transpose() * &kernel);
        resid.svd(false, false).singular_values.max().clamp(0.0, 1.0).asin()
    };
    let dim_s = o.dim();
    let kernel_dim = n - rank;
    let holds = rank_constant_along_s && kernel_dim == dim_s && tangent_alignment_err <= ALIGNMENT_TOL && mu_mb > 0.0;
    Ok(MbReport {
        anchor: anchor.iter().copied().collect(),
        eigenvalues,
        numerical_rank_d: rank,
        mu_mb,
        kernel_dim,
        rank_constant_along_s,
        probe_ranks,
        tangent_alignment_err,
        dim_s,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Pass,
    Fail,
    /// The implication needs a C² cost.
    NotApplicable,
    /// An input estimate is missing.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeVerdict {
    pub edge: &'static str,
    pub requires_c2: bool,
    pub mu_from: Option<f64>,
    pub mu_to: Option<f64>,
    pub status: EdgeStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicationReport {
    pub slack: f64,
    pub edges: Vec<EdgeVerdict>,
    pub pl_holds: bool,
    pub eb_holds: bool,
    pub qg_holds: bool,
    pub mb_holds: Option<bool>,
    /// QG holds while EB or PL fails: only possible without a continuous Hessian.
    pub c1_counterexample: bool,
    pub all_pass: bool,
}

/// Check that each implication `A => B` is reflected in the estimates as
/// `mu_B >= slack * mu_A`. Edges needing a C² cost are marked not applicable
/// for C¹ problems.
pub fn verify_implications(
    estimates: &[ConditionEstimate],
    mb: Option<&MbReport>,
    slack: f64,
    smoothness: Smoothness,
) -> Result<ImplicationReport> {
    if !(slack > 0.0 && slack <= 1.0) {
        return Err(Error::InvalidInput(format!("slack must lie in (0, 1], got {slack}")));
    }
    let get = |k: ConditionKind| estimates.iter().find(|e| e.kind == k).map(|e| e.mu_hat);
    let (pl, eb, qg) = match (get(ConditionKind::Pl), get(ConditionKind::Eb), get(ConditionKind::Qg)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::IncompleteInput("PL, EB and QG estimates are all required".into())),
    };
    let mb_mu = mb.map(|r| if r.holds { r.mu_mb } else { 0.0 });
    let c2 = smoothness.has_hessian();
    let edge = |name, requires_c2, from: Option<f64>, to: Option<f64>| {
        let status = match (from, to) {
            _ if requires_c2 && !c2 => EdgeStatus::NotApplicable,
            (Some(a), Some(b)) if b >= slack * a => EdgeStatus::Pass,
            (Some(_), Some(_)) => EdgeStatus::Fail,
            _ => EdgeStatus::Skipped,
        };
        EdgeVerdict { edge: name, requires_c2, mu_from: from, mu_to: to, status }
    };
    let edges = vec![
        edge("pl_implies_qg", false, Some(pl), Some(qg)),
        edge("pl_implies_eb", false, Some(pl), Some(eb)),
        edge("mb_implies_qg", true, mb_mu, Some(qg)),
        edge("qg_bounds_mb", true, Some(qg), mb_mu),
        edge("eb_implies_pl", true, Some(eb), Some(pl)),
        edge("qg_implies_eb", true, Some(qg), Some(eb)),
        edge("pl_implies_mb", true, Some(pl), mb_mu),
    ];
    let holds = |mu: f64| mu >= HOLD_THRESHOLD;
    let all_pass = edges.iter().all(|e| e.status == EdgeStatus::Pass);
    Ok(ImplicationReport {
        slack,
        pl_holds: holds(pl),
        eb_holds: holds(eb),
        qg_holds: holds(qg),
        mb_holds: mb.map(|r| r.holds),
        c1_counterexample: !c2 && holds(qg) && !(holds(eb) && holds(pl)),
        all_pass,
        edges,
    })
}

#[cfg(test)]
mod tests;
