//! Outer iterations: gradient descent, Newton, adaptive cubic regularization
//! (ARC) and Riemannian trust regions (RTR).
//!
//! Every run returns a [`Trace`]. Row `k` holds the state at `x_k` together
//! with the step attempted from it; the last row is the terminal state and
//! carries no step.

use std::fmt::Write as _;
use std::io;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Tangent};
use crate::linalg::{symmetrize, SortedEigen};
use crate::problems::Problem;
use crate::subsolvers::{
    cauchy_step, newton_step, solve_cubic, solve_trs_exact, solve_trs_tcg, CubicMode, ModelData,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCriteria {
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Keep every iterate in the trace.
    pub record_points: bool,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { grad_tol: 1e-12, max_iters: 500, record_points: false }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidInput("grad_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum GdConfig {
    Constant { gamma: f64 },
    Armijo { alpha_bar: f64, beta: f64, sigma_a: f64 },
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GdConfig::Constant { gamma } => gamma > 0.0,
            GdConfig::Armijo { alpha_bar, beta, sigma_a } => {
                alpha_bar > 0.0 && beta > 0.0 && beta < 1.0 && sigma_a > 0.0 && sigma_a < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid gradient descent parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Relative eigenvalue cutoff of the pseudo-inverse.
    pub rank_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { rank_tol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcConfig {
    pub sigma0: f64,
    pub sigma_min: f64,
    pub rho_c: f64,
    pub gamma_inc: f64,
    pub gamma_dec: f64,
    pub kappa: f64,
    /// When positive, the model Hessian is perturbed by a random symmetric
    /// matrix of norm `beta_h_budget * |grad f|`.
    pub beta_h_budget: f64,
    pub perturb_seed: u64,
    pub subsolver: CubicMode,
}

impl Default for ArcConfig {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            sigma_min: 1e-6,
            rho_c: 0.1,
            gamma_inc: 2.0,
            gamma_dec: 0.5,
            kappa: 0.1,
            beta_h_budget: 0.0,
            perturb_seed: 0,
            subsolver: CubicMode::ExactSecular,
        }
    }
}

impl ArcConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma0 > 0.0
            && self.sigma_min > 0.0
            && self.rho_c > 0.0
            && self.rho_c < 1.0
            && self.gamma_inc > 1.0
            && self.gamma_dec > 0.0
            && self.gamma_dec <= 1.0
            && self.kappa >= 0.0
            && self.beta_h_budget >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid ARC parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrsSubsolver {
    #[default]
    Cauchy,
    Exact,
    Tcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RtrConfig {
    pub delta0: f64,
    pub delta_bar: f64,
    pub rho_prime: f64,
    pub subsolver: TrsSubsolver,
    pub tcg_kappa: f64,
    pub tcg_theta: f64,
}

impl Default for RtrConfig {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            delta_bar: 16.0,
            rho_prime: 0.1,
            subsolver: TrsSubsolver::Cauchy,
            tcg_kappa: 0.1,
            tcg_theta: 1.0,
        }
    }
}

impl RtrConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta0 > 0.0
            && self.delta_bar >= self.delta0
            && self.rho_prime > 0.0
            && self.rho_prime < 0.25
            && self.tcg_kappa > 0.0
            && self.tcg_theta >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid RTR parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Method {
    Gd(GdConfig),
    Newton(NewtonConfig),
    Arc(ArcConfig),
    Rtr(RtrConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd(_) => "gd",
            Method::Newton(_) => "newton",
            Method::Arc(_) => "arc",
            Method::Rtr(_) => "rtr",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Gd(c) => c.validate(),
            Method::Newton(c) if !(c.rank_tol > 0.0) => {
                Err(Error::InvalidInput("rank_tol must be positive".into()))
            }
            Method::Newton(_) => Ok(()),
            Method::Arc(c) => c.validate(),
            Method::Rtr(c) => c.validate(),
        }
    }
}

/// A solver with its stopping rule and an output label.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub label: String,
    pub method: Method,
    pub stop: StopCriteria,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self { label: method.name().to_string(), method, stop: StopCriteria::default() }
    }

    pub fn with_stop(mut self, stop: StopCriteria) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

impl<'de> Deserialize<'de> for SolverConfig {
    /// A flat table: `algorithm`, its parameters, and optionally `label`,
    /// `grad_tol`, `max_iters`, `record_points`.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(d)?;
        let label = match table.remove("label") {
            Some(toml::Value::String(s)) => Some(s),
            Some(other) => return Err(D::Error::custom(format!("label must be a string, got {other}"))),
            None => None,
        };
        let mut shared = toml::Table::new();
        for key in ["grad_tol", "max_iters", "record_points"] {
            if let Some(v) = table.remove(key) {
                shared.insert(key.into(), v);
            }
        }
        let stop: StopCriteria = shared.try_into().map_err(D::Error::custom)?;
        let method: Method = table.try_into().map_err(D::Error::custom)?;
        method.validate().map_err(D::Error::custom)?;
        stop.validate().map_err(D::Error::custom)?;
        let label = label.unwrap_or_else(|| method.name().to_string());
        Ok(Self { label, method, stop })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    MaxIters,
    Stall(String),
    Divergence(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub dist_s: Option<f64>,
    pub step_norm: f64,
    /// Success ratio of the model (ARC, RTR).
    pub ratio: Option<f64>,
    /// Regularization weight (ARC), radius (RTR) or step size (GD).
    pub reg: Option<f64>,
    pub accepted: bool,
    pub x: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub solver: String,
    pub problem: String,
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub final_point: Point,
    pub grad_tol: f64,
}

pub const CSV_HEADER: &str = "k,f,grad_norm,dist_S,step_norm,ratio,reg,accepted";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Trace {
    /// Number of steps attempted.
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("a trace has at least one row")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::GradTol
    }

    /// Rows of the distinct iterates: the first row and every row following
    /// an accepted step.
    pub fn iterate_rows(&self) -> Vec<&TraceRow> {
        let mut out = vec![&self.rows[0]];
        for w in self.rows.windows(2) {
            if w[0].accepted {
                out.push(&w[1]);
            }
        }
        out
    }

    pub fn dist_sequence(&self) -> Option<Vec<f64>> {
        self.iterate_rows().iter().map(|r| r.dist_s).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k,
                r.f,
                r.grad_norm,
                opt(r.dist_s),
                r.step_norm,
                opt(r.ratio),
                opt(r.reg),
                r.accepted
            );
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Gradient and Hessian expressed in an orthonormal basis of the tangent space.
struct LocalModel {
    basis: Option<DMatrix<f64>>,
    md: ModelData,
}

impl LocalModel {
    fn new(p: &Problem, x: &Point, grad: &Tangent, hess: &DMatrix<f64>) -> Result<Self> {
        let m = p.manifold();
        if m.is_euclidean() {
            return Ok(Self { basis: None, md: ModelData::new(grad.clone(), symmetrize(hess))? });
        }
        let b = m.tangent_basis(x);
        let g = b.transpose() * grad;
        let h = symmetrize(&(b.transpose() * hess * &b));
        Ok(Self { basis: Some(b), md: ModelData::new(g, h)? })
    }

    fn lift(&self, s: &DVector<f64>) -> Tangent {
        match &self.basis {
            Some(b) => b * s,
            None => s.clone(),
        }
    }
}

/// Shared bookkeeping of all loops.
struct Recorder<'a> {
    p: &'a Problem,
    stop: StopCriteria,
    rows: Vec<TraceRow>,
}

struct State {
    x: Point,
    f: f64,
    grad: Tangent,
}

impl<'a> Recorder<'a> {
    fn new(p: &'a Problem, stop: &StopCriteria) -> Result<Self> {
        stop.validate()?;
        Ok(Self { p, stop: *stop, rows: Vec::new() })
    }

    fn state(&self, x: Point) -> Result<State> {
        self.p.manifold().check_point(&x)?;
        let f = self.p.value(&x);
        let grad = self.p.grad(&x);
        Ok(State { x, f, grad })
    }

    fn push(&mut self, s: &State, step_norm: f64, ratio: Option<f64>, reg: Option<f64>, accepted: bool) {
        self.rows.push(TraceRow {
            k: self.rows.len(),
            f: s.f,
            grad_norm: s.grad.norm(),
            dist_s: self.p.dist_to_s(&s.x),
            step_norm,
            ratio,
            reg,
            accepted,
            x: self.stop.record_points.then(|| s.x.clone()),
        });
    }

    /// Termination check at the top of an iteration.
    fn should_stop(&self, s: &State) -> Option<Termination> {
        if !s.f.is_finite() || s.grad.iter().any(|v| !v.is_finite()) {
            return Some(Termination::Divergence(format!("non-finite value at iteration {}", self.rows.len())));
        }
        if s.grad.norm() <= self.stop.grad_tol {
            return Some(Termination::GradTol);
        }
        if self.rows.len() >= self.stop.max_iters {
            return Some(Termination::MaxIters);
        }
        None
    }

    fn finish(mut self, label: &str, s: State, reg: Option<f64>, termination: Termination) -> Trace {
        self.push(&s, 0.0, None, reg, false);
        Trace {
            solver: label.to_string(),
            problem: self.p.name().to_string(),
            rows: self.rows,
            termination,
            final_point: s.x,
            grad_tol: self.stop.grad_tol,
        }
    }
}

fn require_hessian(p: &Problem, who: &str) -> Result<()> {
    if p.smoothness().has_hessian() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{who} needs a C2 problem, `{}` is only C1", p.name())))
    }
}

/// Evaluate a trial point; a domain failure or non-finite value is divergence.
fn trial(rec: &Recorder, x: &Point, v: &Tangent) -> std::result::Result<State, Termination> {
    let diverged = |e: String| Termination::Divergence(e);
    let y = rec.p.manifold().retract(x, v).map_err(|e| diverged(e.to_string()))?;
    if y.iter().any(|c| !c.is_finite()) {
        return Err(diverged("non-finite iterate".into()));
    }
    rec.state(y).map_err(|e| diverged(e.to_string()))
}

/// Gradient descent with constant step or Armijo backtracking.
pub fn run_gd(p: &Problem, x0: &Point, cfg: &GdConfig, stop: &StopCriteria) -> Result<Trace> {
    cfg.validate()?;
    let mut rec = Recorder::new(p, stop)?;
    let mut s = rec.state(x0.clone())?;
    loop {
        if let Some(t) = rec.should_stop(&s) {
            return Ok(rec.finish("gd", s, None, t));
        }
        let g2 = s.grad.norm_squared();
        let next = match *cfg {
            GdConfig::Constant { gamma } => trial(&rec, &s.x, &(&s.grad * -gamma)).map(|n| (gamma, n)),
            GdConfig::Armijo { alpha_bar, beta, sigma_a } => {
                let mut alpha = alpha_bar;
                let mut found = None;
                for _ in 0..100 {
                    let cand = trial(&rec, &s.x, &(&s.grad * -alpha));
                    if let Ok(c) = &cand {
                        if s.f - c.f >= sigma_a * alpha * g2 {
                            found = Some(cand.map(|n| (alpha, n)));
                            break;
                        }
                    }
                    alpha *= beta;
                }
                found.unwrap_or_else(|| Err(Termination::Stall("Armijo backtracking exhausted".into())))
            }
        };
        match next {
            Ok((alpha, n)) => {
                rec.push(&s, alpha * g2.sqrt(), None, Some(alpha), true);
                s = n;
            }
            Err(t) => return Ok(rec.finish("gd", s, None, t)),
        }
    }
}

/// Undamped (pseudo-inverse) Newton iteration.
pub fn run_newton(p: &Problem, x0: &Point, cfg: &NewtonConfig, stop: &StopCriteria) -> Result<Trace> {
    require_hessian(p, "Newton's method")?;
    Method::Newton(*cfg).validate()?;
    let mut rec = Recorder::new(p, stop)?;
    let mut s = rec.state(x0.clone())?;
    loop {
        if let Some(t) = rec.should_stop(&s) {
            return Ok(rec.finish("newton", s, None, t));
        }
        let local = LocalModel::new(p, &s.x, &s.grad, &p.hess(&s.x)?)?;
        let step = local.lift(&newton_step(&local.md, cfg.rank_tol)?);
        match trial(&rec, &s.x, &step) {
            Ok(n) => {
                rec.push(&s, step.norm(), None, None, true);
                s = n;
            }
            Err(t) => return Ok(rec.finish("newton", s, None, t)),
        }
    }
}

/// Random symmetric matrix with spectral norm `scale`.
fn perturbation(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let e = symmetrize(&g);
    let norm = SortedEigen::new(&e).norm();
    if norm == 0.0 || scale == 0.0 {
        DMatrix::zeros(n, n)
    } else {
        e * (scale / norm)
    }
}

/// Adaptive cubic regularization.
pub fn run_arc(p: &Problem, x0: &Point, cfg: &ArcConfig, stop: &StopCriteria) -> Result<Trace> {
    require_hessian(p, "ARC")?;
    cfg.validate()?;
    let mut rec = Recorder::new(p, stop)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.perturb_seed);
    let mut sigma = cfg.sigma0;
    let mut s = rec.state(x0.clone())?;
    loop {
        if let Some(t) = rec.should_stop(&s) {
            return Ok(rec.finish("arc", s, Some(sigma), t));
        }
        let mut local = LocalModel::new(p, &s.x, &s.grad, &p.hess(&s.x)?)?;
        if cfg.beta_h_budget > 0.0 {
            let scale = cfg.beta_h_budget * s.grad.norm();
            local.md.h += perturbation(&mut rng, local.md.dim(), scale);
        }
        let sol = match solve_cubic(&local.md, sigma, cfg.kappa, cfg.subsolver) {
            Ok(sol) => sol,
            Err(Error::SubsolverStall(it)) => {
                let t = Termination::Stall(format!("cubic subsolver stalled after {it} iterations"));
                return Ok(rec.finish("arc", s, Some(sigma), t));
            }
            Err(e) => return Err(e),
        };
        let step = local.lift(&sol.s);
        let n = match trial(&rec, &s.x, &step) {
            Ok(n) => n,
            Err(t) => return Ok(rec.finish("arc", s, Some(sigma), t)),
        };
        // m(0) - m(s) + sigma |s|^3 / 3 is the decrease of the quadratic part
        let predicted = -local.md.quadratic(&sol.s);
        let ratio = if predicted == 0.0 { 1.0 } else { (s.f - n.f) / predicted };
        let accepted = ratio >= cfg.rho_c;
        rec.push(&s, step.norm(), Some(ratio), Some(sigma), accepted);
        if accepted {
            if n.x == s.x {
                return Ok(rec.finish("arc", n, Some(sigma), Termination::Stall("step below resolution".into())));
            }
            sigma = (cfg.gamma_dec * sigma).max(cfg.sigma_min);
            s = n;
        } else {
            sigma *= cfg.gamma_inc;
            if !sigma.is_finite() {
                return Ok(rec.finish("arc", s, Some(sigma), Termination::Stall("regularization overflow".into())));
            }
        }
    }
}

/// Riemannian trust-region method.
pub fn run_rtr(p: &Problem, x0: &Point, cfg: &RtrConfig, stop: &StopCriteria) -> Result<Trace> {
    require_hessian(p, "RTR")?;
    cfg.validate()?;
    let mut rec = Recorder::new(p, stop)?;
    let mut delta = cfg.delta0;
    let mut s = rec.state(x0.clone())?;
    loop {
        if let Some(t) = rec.should_stop(&s) {
            return Ok(rec.finish("rtr", s, Some(delta), t));
        }
        let local = LocalModel::new(p, &s.x, &s.grad, &p.hess(&s.x)?)?;
        let step_r = match cfg.subsolver {
            TrsSubsolver::Cauchy => cauchy_step(&local.md, delta)?,
            TrsSubsolver::Exact => solve_trs_exact(&local.md, delta, 1e-12)?.s,
            TrsSubsolver::Tcg => {
                solve_trs_tcg(&local.md, delta, cfg.tcg_kappa, cfg.tcg_theta, local.md.dim().max(1))?.s
            }
        };
        let step = local.lift(&step_r);
        let n = match trial(&rec, &s.x, &step) {
            Ok(n) => n,
            Err(t) => return Ok(rec.finish("rtr", s, Some(delta), t)),
        };
        let predicted = -local.md.quadratic(&step_r);
        let rho = if predicted == 0.0 { 1.0 } else { (s.f - n.f) / predicted };
        let accepted = rho > cfg.rho_prime;
        let step_norm = step_r.norm();
        rec.push(&s, step_norm, Some(rho), Some(delta), accepted);
        let on_boundary = (step_norm - delta).abs() <= 1e-12 * delta.max(1.0);
        if rho < 0.25 {
            delta /= 4.0;
        } else if rho > 0.75 && on_boundary {
            delta = (2.0 * delta).min(cfg.delta_bar);
        }
        if accepted {
            if n.x == s.x {
                return Ok(rec.finish("rtr", n, Some(delta), Termination::Stall("step below resolution".into())));
            }
            s = n;
        } else if delta < f64::MIN_POSITIVE {
            return Ok(rec.finish("rtr", s, Some(delta), Termination::Stall("trust region collapsed".into())));
        }
    }
}

/// Run any configured solver; the trace carries the config's label.
pub fn run(p: &Problem, x0: &Point, cfg: &SolverConfig) -> Result<Trace> {
    let mut trace = match &cfg.method {
        Method::Gd(c) => run_gd(p, x0, c, &cfg.stop),
        Method::Newton(c) => run_newton(p, x0, c, &cfg.stop),
        Method::Arc(c) => run_arc(p, x0, c, &cfg.stop),
        Method::Rtr(c) => run_rtr(p, x0, c, &cfg.stop),
    }?;
    trace.solver = cfg.label.clone();
    Ok(trace)
}

#[cfg(test)]
mod tests;
