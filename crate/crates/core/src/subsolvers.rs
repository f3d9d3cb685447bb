//! Inner solvers for second-order models.
//!
//! All solvers work in an orthonormal coordinate system of the tangent space:
//! `g` is the gradient, `h` the (symmetric) Hessian or its approximation. The
//! quadratic model is `m(s) = <g, s> + <s, h s> / 2` and the cubic model adds
//! `sigma |s|^3 / 3`. Constant terms `f(x)` are left out.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{compensated_residual, SortedEigen};
use crate::{Error, Result};

/// Relative asymmetry tolerated in model Hessians.
const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues within this (relative) gap of the smallest one share its eigenspace.
const EIG_CLUSTER_TOL: f64 = 1e-12;
/// Gradient components along the bottom eigenspace below this fraction of `|g|`
/// are treated as zero when testing for the hard case.
const HARD_CASE_TOL: f64 = 1e-12;
/// Iteration cap of the inexact cubic solver.
pub const CUBIC_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ModelData {
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl ModelData {
    pub fn new(g: DVector<f64>, h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != g.len() {
            return Err(Error::InvalidInput(format!(
                "model dimensions disagree: g has {}, H is {}x{}",
                g.len(),
                h.nrows(),
                h.ncols()
            )));
        }
        let asym = crate::linalg::asymmetry(&h);
        let scale = h.amax().max(1.0);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidInput(format!("model Hessian is not symmetric ({asym:e})")));
        }
        Ok(Self { g, h })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `m(s) - m(0)` for the quadratic model.
    pub fn quadratic(&self, s: &DVector<f64>) -> f64 {
        self.g.dot(s) + 0.5 * s.dot(&(&self.h * s))
    }

    /// `m(s) - m(0)` for the cubic model with weight `sigma`.
    pub fn cubic(&self, s: &DVector<f64>, sigma: f64) -> f64 {
        self.quadratic(s) + sigma / 3.0 * s.norm().powi(3)
    }

    /// `g + H s + sigma |s| s`.
    pub fn cubic_gradient(&self, s: &DVector<f64>, sigma: f64) -> DVector<f64> {
        &self.g + &self.h * s + s * (sigma * s.norm())
    }
}

/// Pseudo-inverse Newton step `-H^+ g`, discarding eigenvalues with
/// `|lambda| <= rank_tol * |H|`.
///
/// When nothing is discarded the step is polished by iterative refinement with
/// a compensated residual, so nearly singular systems are solved to working
/// accuracy.
pub fn newton_step(md: &ModelData, rank_tol: f64) -> Result<DVector<f64>> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidInput("rank_tol must be positive".into()));
    }
    let eig = SortedEigen::new(&md.h);
    let norm = eig.norm();
    if norm == 0.0 {
        return Ok(DVector::zeros(md.dim()));
    }
    let cut = rank_tol * norm;
    let keep: Vec<bool> = eig.values.iter().map(|l| l.abs() > cut).collect();
    let apply_pinv = |r: &DVector<f64>| -> DVector<f64> {
        let rh = eig.project(r);
        let coef = DVector::from_iterator(
            rh.len(),
            rh.iter()
                .zip(eig.values.iter())
                .zip(&keep)
                .map(|((ri, li), k)| if *k { ri / li } else { 0.0 }),
        );
        -(&eig.vectors * coef)
    };
    let mut s = apply_pinv(&md.g);
    if keep.iter().all(|k| *k) {
        for _ in 0..6 {
            let r = compensated_residual(&md.h, &s, &md.g);
            let ds = apply_pinv(&r);
            s += &ds;
            if ds.norm() <= f64::EPSILON * s.norm() {
                break;
            }
        }
    }
    Ok(s)
}

/// Minimizer of the quadratic model along `-g` within radius `delta`.
pub fn cauchy_step(md: &ModelData, delta: f64) -> Result<DVector<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("trust-region radius must be positive".into()));
    }
    let gn = md.g.norm();
    if gn == 0.0 {
        return Ok(DVector::zeros(md.dim()));
    }
    let curv = md.g.dot(&(&md.h * &md.g));
    let boundary = delta / gn;
    let t = if curv > 0.0 {
        (gn * gn / curv).min(boundary)
    } else {
        boundary
    };
    Ok(&md.g * -t)
}

#[derive(Debug, Clone)]
pub struct TrsSolution {
    pub s: DVector<f64>,
    pub lambda: f64,
    pub on_boundary: bool,
    pub hard_case: bool,
}

/// Eigenvector of the smallest eigenvalue, signed so that its first
/// non-negligible coordinate is positive.
fn signed_bottom_vector(eig: &SortedEigen) -> DVector<f64> {
    let u = eig.vectors.column(0).into_owned();
    let lead = u.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if lead < 0.0 {
        -u
    } else {
        u
    }
}

/// `-(H + shift I)^+ g` in the eigenbasis, skipping indices in `skip`.
fn shifted_solve(eig: &SortedEigen, ghat: &DVector<f64>, shift: f64, skip: usize) -> DVector<f64> {
    let coef = DVector::from_iterator(
        ghat.len(),
        (0..ghat.len()).map(|i| {
            if i < skip || ghat[i] == 0.0 {
                0.0
            } else {
                -ghat[i] / (eig.values[i] + shift)
            }
        }),
    );
    &eig.vectors * coef
}

/// `(|s(shift)|, d|s|/d shift)` for `s(shift) = -(H + shift I)^{-1} g`.
fn secular_norm(values: &DVector<f64>, ghat: &DVector<f64>, shift: f64) -> (f64, f64) {
    let mut n2 = 0.0;
    let mut dn2 = 0.0;
    for (l, gi) in values.iter().zip(ghat.iter()) {
        if *gi == 0.0 {
            continue;
        }
        let d = l + shift;
        if d <= 0.0 {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        n2 += gi * gi / (d * d);
        dn2 += -2.0 * gi * gi / (d * d * d);
    }
    let n = n2.sqrt();
    (n, if n > 0.0 { dn2 / (2.0 * n) } else { 0.0 })
}

/// Root of an increasing function on `(lo, hi)` with `f(hi) >= 0`, by Newton
/// steps safeguarded with bisection. `f` returns value and derivative.
fn increasing_root(f: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut x = hi;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..500 {
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= 2.0 * f64::EPSILON * b.abs().max(1e-300) {
            break;
        }
        let newton = if dfx.is_finite() && dfx > 0.0 { x - fx / dfx } else { f64::NAN };
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        (fx, dfx) = f(x);
    }
    if fx < 0.0 {
        b
    } else {
        x
    }
}

/// Global minimizer of the quadratic model over the ball of radius `delta`.
///
/// Characterized by `(H + lambda I) s = -g`, `lambda (delta - |s|) = 0` and
/// `H + lambda I ⪰ 0`. The boundary multiplier solves the secular equation
/// `1/|s(lambda)| = 1/delta`. In the hard case (`g` orthogonal to the bottom
/// eigenspace) the step is completed along the bottom eigenvector, signed so
/// its first nonzero coordinate is positive.
pub fn solve_trs_exact(md: &ModelData, delta: f64, tol: f64) -> Result<TrsSolution> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("trust-region radius must be positive".into()));
    }
    let n = md.dim();
    if n == 0 {
        return Ok(TrsSolution { s: DVector::zeros(0), lambda: 0.0, on_boundary: false, hard_case: false });
    }
    let eig = SortedEigen::new(&md.h);
    let lmin = eig.values[0];
    let cluster = EIG_CLUSTER_TOL * eig.norm().max(1.0);
    let bottom = eig.values.iter().take_while(|l| **l <= lmin + cluster).count();
    let mut ghat = eig.project(&md.g);
    let gn = md.g.norm();
    let g_bottom = ghat.rows(0, bottom).norm();
    let lo = (-lmin).max(0.0);

    // Interior solution with lambda = 0.
    if lmin > cluster {
        let s = shifted_solve(&eig, &ghat, 0.0, 0);
        if s.norm() <= delta {
            return Ok(TrsSolution { s, lambda: 0.0, on_boundary: false, hard_case: false });
        }
    } else if lmin >= -cluster && g_bottom <= HARD_CASE_TOL * gn.max(tol) {
        let s = shifted_solve(&eig, &ghat, 0.0, bottom);
        if s.norm() <= delta {
            return Ok(TrsSolution { s, lambda: 0.0, on_boundary: false, hard_case: false });
        }
    }

    if g_bottom <= HARD_CASE_TOL * gn && lmin < -cluster {
        let s_hat = shifted_solve(&eig, &ghat, lo, bottom);
        let sn = s_hat.norm();
        if sn <= delta {
            let tau = (delta * delta - sn * sn).max(0.0).sqrt();
            let s = s_hat + signed_bottom_vector(&eig) * tau;
            return Ok(TrsSolution { s, lambda: lo, on_boundary: true, hard_case: true });
        }
        // otherwise the secular root lies strictly above -lmin
        for i in 0..bottom {
            ghat[i] = 0.0;
        }
    }

    let phi = |lam: f64| {
        let (nrm, dn) = secular_norm(&eig.values, &ghat, lam);
        if nrm.is_infinite() {
            (-1.0 / delta, f64::INFINITY)
        } else {
            (1.0 / nrm - 1.0 / delta, -dn / (nrm * nrm))
        }
    };
    let mut hi = (gn / delta - lmin).max(lo);
    if hi <= lo {
        hi = lo + 1e-300;
    }
    while phi(hi).0 < 0.0 {
        hi = lo + 2.0 * (hi - lo).max(1e-16);
    }
    let lambda = increasing_root(phi, lo, hi);
    let s = shifted_solve(&eig, &ghat, lambda, 0);
    Ok(TrsSolution { s, lambda, on_boundary: true, hard_case: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TcgExit {
    ZeroGradient,
    NegativeCurvature,
    ExceededRadius,
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct TcgStep {
    pub s: DVector<f64>,
    pub inner_iters: usize,
    pub exit: TcgExit,
}

/// Positive `tau` with `|s + tau d| = delta`, for `|s| <= delta`.
fn to_boundary(s: &DVector<f64>, d: &DVector<f64>, delta: f64) -> f64 {
    let dd = d.norm_squared();
    let sd = s.dot(d);
    let ss = s.norm_squared();
    let disc = (sd * sd + dd * (delta * delta - ss)).max(0.0).sqrt();
    if sd >= 0.0 {
        (delta * delta - ss).max(0.0) / (sd + disc)
    } else {
        (disc - sd) / dd
    }
}

/// Steihaug–Toint truncated conjugate gradients from `s = 0`.
///
/// Stops on negative curvature or when the next iterate would leave the
/// ball (both moving to the boundary), or once the residual drops below
/// `|g| min(kappa, |g|^theta)`.
pub fn solve_trs_tcg(md: &ModelData, delta: f64, kappa: f64, theta: f64, max_iter: usize) -> Result<TcgStep> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("trust-region radius must be positive".into()));
    }
    let n = md.dim();
    let gn = md.g.norm();
    if gn == 0.0 {
        return Ok(TcgStep { s: DVector::zeros(n), inner_iters: 0, exit: TcgExit::ZeroGradient });
    }
    let target = gn * kappa.min(gn.powf(theta));
    let mut s = DVector::zeros(n);
    let mut r = md.g.clone();
    let mut d = -&r;
    let mut rr = r.norm_squared();
    for j in 0..max_iter {
        let hd = &md.h * &d;
        let curv = d.dot(&hd);
        if curv <= 0.0 {
            let tau = to_boundary(&s, &d, delta);
            return Ok(TcgStep { s: s + d * tau, inner_iters: j + 1, exit: TcgExit::NegativeCurvature });
        }
        let alpha = rr / curv;
        let next = &s + &d * alpha;
        if next.norm() >= delta {
            let tau = to_boundary(&s, &d, delta);
            return Ok(TcgStep { s: s + d * tau, inner_iters: j + 1, exit: TcgExit::ExceededRadius });
        }
        s = next;
        r += hd * alpha;
        let rr_new = r.norm_squared();
        if rr_new.sqrt() <= target {
            return Ok(TcgStep { s, inner_iters: j + 1, exit: TcgExit::Converged });
        }
        d = -&r + d * (rr_new / rr);
        rr = rr_new;
    }
    Ok(TcgStep { s, inner_iters: max_iter, exit: TcgExit::MaxIters })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CubicMode {
    /// Global minimizer through the secular equation.
    #[default]
    ExactSecular,
    /// Descent from the cubic Cauchy point until the model gradient is small.
    InexactGradient,
}

#[derive(Debug, Clone)]
pub struct CubicSolution {
    pub s: DVector<f64>,
    /// `m(s) - m(0)`, never positive.
    pub model_value: f64,
    pub model_grad_norm: f64,
    pub inner_iters: usize,
    pub mode: CubicMode,
    /// `m(s) <= m(0)`.
    pub decrease_ok: bool,
    /// `|grad m(s)| <= kappa |s| |g|`.
    pub gradient_ok: bool,
}

impl CubicSolution {
    fn certify(md: &ModelData, s: DVector<f64>, sigma: f64, kappa: f64, iters: usize, mode: CubicMode) -> Self {
        let model_value = md.cubic(&s, sigma);
        let model_grad_norm = md.cubic_gradient(&s, sigma).norm();
        let gradient_ok = model_grad_norm <= kappa * s.norm() * md.g.norm() || model_grad_norm == 0.0;
        Self {
            model_value,
            model_grad_norm,
            inner_iters: iters,
            mode,
            decrease_ok: model_value <= 0.0,
            gradient_ok,
            s,
        }
    }
}

/// Approximate minimizer of the cubic model `m(s) = <g,s> + <s,Hs>/2 + sigma |s|^3 / 3`.
pub fn solve_cubic(md: &ModelData, sigma: f64, kappa: f64, mode: CubicMode) -> Result<CubicSolution> {
    if !(sigma > 0.0) || !(kappa >= 0.0) {
        return Err(Error::InvalidInput(format!("need sigma > 0 and kappa >= 0, got {sigma}, {kappa}")));
    }
    match mode {
        CubicMode::ExactSecular => solve_cubic_exact(md, sigma, kappa),
        CubicMode::InexactGradient => solve_cubic_inexact(md, sigma, kappa),
    }
}

fn solve_cubic_exact(md: &ModelData, sigma: f64, kappa: f64) -> Result<CubicSolution> {
    let n = md.dim();
    let done = |s, iters| Ok(CubicSolution::certify(md, s, sigma, kappa, iters, CubicMode::ExactSecular));
    if n == 0 {
        return done(DVector::zeros(0), 0);
    }
    let eig = SortedEigen::new(&md.h);
    let lmin = eig.values[0];
    let cluster = EIG_CLUSTER_TOL * eig.norm().max(1.0);
    let bottom = eig.values.iter().take_while(|l| **l <= lmin + cluster).count();
    let mut ghat = eig.project(&md.g);
    let gn = md.g.norm();
    let g_bottom = ghat.rows(0, bottom).norm();
    let lo = (-lmin).max(0.0);

    if gn == 0.0 && lmin >= 0.0 {
        return done(DVector::zeros(n), 0);
    }
    if g_bottom <= HARD_CASE_TOL * gn && lmin < -cluster {
        let s_hat = shifted_solve(&eig, &ghat, lo, bottom);
        let radius = lo / sigma;
        let sn = s_hat.norm();
        if sn <= radius {
            let tau = (radius * radius - sn * sn).max(0.0).sqrt();
            return done(s_hat + signed_bottom_vector(&eig) * tau, 0);
        }
        for i in 0..bottom {
            ghat[i] = 0.0;
        }
    }

    // psi(nu) = 1/|s(nu)| - sigma/nu, increasing and concave on (lo, inf)
    let psi = |nu: f64| {
        let (nrm, dn) = secular_norm(&eig.values, &ghat, nu);
        if nrm.is_infinite() || nu <= 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (1.0 / nrm - sigma / nu, -dn / (nrm * nrm) + sigma / (nu * nu))
        }
    };
    let mut hi = 0.5 * (-lmin + (lmin * lmin + 4.0 * sigma * gn).sqrt());
    hi = hi.max(lo);
    if hi <= lo {
        hi = lo + 1e-300;
    }
    while psi(hi).0 < 0.0 {
        hi = lo + 2.0 * (hi - lo).max(1e-16);
    }
    let nu = increasing_root(psi, lo, hi);
    done(shifted_solve(&eig, &ghat, nu, 0), 0)
}

fn solve_cubic_inexact(md: &ModelData, sigma: f64, kappa: f64) -> Result<CubicSolution> {
    let n = md.dim();
    let gn = md.g.norm();
    if gn == 0.0 {
        return Ok(CubicSolution::certify(md, DVector::zeros(n), sigma, kappa, 0, CubicMode::InexactGradient));
    }
    // cubic Cauchy point: minimize m(-alpha g) over alpha >= 0
    let curv = md.g.dot(&(&md.h * &md.g));
    let g3 = gn.powi(3);
    let alpha = 2.0 * gn * gn / (curv + (curv * curv + 4.0 * sigma * g3 * gn * gn).sqrt());
    let mut s = &md.g * -alpha;
    let mut m_s = md.cubic(&s, sigma);

    for it in 0..CUBIC_MAX_ITERS {
        let gm = md.cubic_gradient(&s, sigma);
        let gmn = gm.norm();
        let sn = s.norm();
        if gmn <= kappa * sn * gn {
            return Ok(CubicSolution::certify(md, s, sigma, kappa, it, CubicMode::InexactGradient));
        }
        // curvature of the cubic model at s
        let mut hm = md.h.clone();
        if sn > 0.0 {
            for i in 0..n {
                hm[(i, i)] += sigma * sn;
            }
            hm += (&s * s.transpose()) * (sigma / sn);
        }
        let newton = hm.clone().cholesky().map(|c| -c.solve(&gm)).or_else(|| {
            // indefinite: Newton with the eigenvalues replaced by their moduli
            let eig = SortedEigen::new(&hm);
            let floor = 1e-12 * eig.norm().max(1e-300);
            let c = eig.project(&gm);
            let c = DVector::from_fn(n, |i, _| -c[i] / eig.values[i].abs().max(floor));
            Some(&eig.vectors * c)
        });
        let (dir, t0) = match newton {
            Some(d) if d.dot(&gm) < 0.0 => (d, 1.0),
            _ => {
                let c = gm.dot(&(&hm * &gm));
                let t = if c > 0.0 { gmn * gmn / c } else { 1.0 / (hm.norm() + 1.0) };
                (-gm.clone(), t)
            }
        };
        let slope = gm.dot(&dir);
        let mut t = t0;
        let mut moved = false;
        for _ in 0..80 {
            let cand = &s + &dir * t;
            let mc = md.cubic(&cand, sigma);
            if mc <= m_s + 1e-4 * t * slope {
                s = cand;
                m_s = mc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return Err(Error::SubsolverStall(it + 1));
        }
    }
    Err(Error::SubsolverStall(CUBIC_MAX_ITERS))
}

/// Upper bound on the norm of any step with `m(s) <= m(0)`:
/// `sqrt(3|g|/sigma) + 3/(2 sigma) max(0, beta_h |g| - lambda_min)`.
pub fn cubic_step_bound(grad_norm: f64, lambda_min: f64, sigma: f64, beta_h: f64) -> f64 {
    (3.0 * grad_norm / sigma).sqrt() + 1.5 / sigma * (beta_h * grad_norm - lambda_min).max(0.0)
}
