//! Benchmark cost functions whose minimizers form continua.
//!
//! Each catalog entry provides the cost, its ambient (Euclidean) gradient and
//! Hessian, and where possible a [`SolutionSet`] oracle exposing `f*`, the
//! distance to the solution set `S` and the projection onto it. [`Problem`]
//! turns the ambient derivatives into Riemannian ones for the sphere.

mod catalog;
mod factorization;
mod regression;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{Manifold, ManifoldKind, Point, RetractionKind, Tangent};
use crate::{Error, Result};

pub use catalog::{
    AnisoQuad, Circle, CrossC1, NewtonTrap, QgNotEb, Quadratic, Quartic1d, SphereBand,
};
pub use factorization::BurerMonteiro;
pub use regression::OverparamRegression;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    C1,
    C2,
    Analytic,
}

impl Smoothness {
    pub fn has_hessian(self) -> bool {
        !matches!(self, Smoothness::C1)
    }
}

/// A cost in ambient coordinates.
pub trait Cost: Send + Sync + fmt::Debug {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `None` when the cost is only C¹.
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>>;
}

/// Closed-form (or numerical) description of the local solution set `S`.
pub trait SolutionSet: Send + Sync + fmt::Debug {
    fn f_star(&self) -> f64;
    fn dist(&self, x: &Point) -> f64;
    fn project(&self, x: &Point) -> Point;
    /// Dimension of `S` as a set (the number of free directions).
    fn dim(&self) -> usize;
    /// Expected rank of the Hessian on `S`.
    fn hessian_rank(&self) -> usize;
    /// Number of smooth branches of `S` through a neighborhood of `x`.
    /// More than one means `S` is not a manifold there.
    fn branches_near(&self, _x: &Point, _radius: f64) -> usize {
        1
    }
}

/// Everything evaluated at one point.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub f: f64,
    pub grad: Tangent,
    /// Riemannian Hessian as an ambient matrix (zero on normal directions),
    /// absent for C¹ problems.
    pub hess: Option<DMatrix<f64>>,
}

#[derive(Clone)]
pub struct Problem {
    name: String,
    manifold: Manifold,
    smoothness: Smoothness,
    cost: Arc<dyn Cost>,
    oracle: Option<Arc<dyn SolutionSet>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .field("smoothness", &self.smoothness)
            .field("has_oracle", &self.oracle.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        manifold: Manifold,
        smoothness: Smoothness,
        cost: Arc<dyn Cost>,
        oracle: Option<Arc<dyn SolutionSet>>,
    ) -> Self {
        Self {
            name: name.into(),
            manifold,
            smoothness,
            cost,
            oracle,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn oracle(&self) -> Option<&dyn SolutionSet> {
        self.oracle.as_deref()
    }

    pub fn cost(&self) -> &dyn Cost {
        self.cost.as_ref()
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.cost.value(x)
    }

    /// Riemannian gradient.
    pub fn grad(&self, x: &Point) -> Tangent {
        let g = self.cost.gradient(x);
        self.manifold.project_tangent(x, &g)
    }

    /// Riemannian Hessian as an ambient matrix.
    pub fn hess(&self, x: &Point) -> Result<DMatrix<f64>> {
        let h = self.cost.hessian(x).ok_or_else(|| {
            Error::Unsupported(format!("problem `{}` is only C1: no Hessian", self.name))
        })?;
        Ok(match self.manifold.kind {
            ManifoldKind::Euclidean(_) => h,
            ManifoldKind::UnitSphere(n) => {
                // P (∇²f̄ - <x, ∇f̄> I) P
                let eg = self.cost.gradient(x);
                let p = DMatrix::identity(n, n) - x * x.transpose();
                let shifted = h - DMatrix::identity(n, n) * x.dot(&eg);
                crate::linalg::symmetrize(&(&p * shifted * &p))
            }
        })
    }

    pub fn eval_bundle(&self, x: &Point) -> Result<Bundle> {
        self.manifold.check_point(x)?;
        let hess = if self.smoothness.has_hessian() {
            Some(self.hess(x)?)
        } else {
            None
        };
        Ok(Bundle {
            f: self.value(x),
            grad: self.grad(x),
            hess,
        })
    }

    pub fn f_star(&self) -> Option<f64> {
        self.oracle.as_ref().map(|o| o.f_star())
    }

    pub fn dist_to_s(&self, x: &Point) -> Option<f64> {
        self.oracle.as_ref().map(|o| o.dist(x))
    }
}

/// Catalog entry plus parameters. Generated instances are deterministic in
/// their seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `f(x) = x^4`.
    Quartic1d,
    /// `f(x, y) = (x^2 + 1) y^2 / 2`, minimizers on the x-axis.
    NewtonTrap,
    /// `f(x, y) = (x^2 + y^2 - 1)^2`, minimizers on the unit circle.
    Circle,
    /// `f(x, y, z) = (a y^2 + b z^2) / 2` with `0 < a <= b`.
    AnisoQuad { a: f64, b: f64 },
    /// `f(x, y) = x^2 y^2 / (x^2 + y^2)`, minimizers on the coordinate cross.
    CrossC1,
    /// `f(x) = 2x^2 + x^2 sin(|x|^{-1/2})`.
    QgNotEb,
    /// `f(x) = sum_i d_i x_i^2 / 2` with `d_i >= 0`.
    Quadratic { diag: Vec<f64> },
    /// `f(x) = |F(x) - b|^2 / 2` with `F(x) = A x + (x^T Q_i x / 2)_i`, `m > n`.
    OverparamRegression { m: usize, n: usize, seed: u64 },
    /// `f(Y) = |Y Y^T - Y* Y*^T|_F^2 / 2` over `p × r` matrices.
    BurerMonteiro { p: usize, r: usize, seed: u64 },
    /// `f(x) = x_3^2` on the unit sphere in `R^3`, minimizers on the equator.
    SphereBand,
}

impl ProblemSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemSpec::Quartic1d => "quartic1d",
            ProblemSpec::NewtonTrap => "newton_trap",
            ProblemSpec::Circle => "circle",
            ProblemSpec::AnisoQuad { .. } => "aniso_quad",
            ProblemSpec::CrossC1 => "cross_c1",
            ProblemSpec::QgNotEb => "qg_not_eb",
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::OverparamRegression { .. } => "overparam_regression",
            ProblemSpec::BurerMonteiro { .. } => "burer_monteiro",
            ProblemSpec::SphereBand => "sphere_band",
        }
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    fn wrap<C, O>(
        name: &str,
        manifold: Manifold,
        smoothness: Smoothness,
        cost: C,
        oracle: O,
    ) -> Problem
    where
        C: Cost + 'static,
        O: SolutionSet + 'static,
    {
        Problem::new(name, manifold, smoothness, Arc::new(cost), Some(Arc::new(oracle)))
    }

    let name = spec.label();
    Ok(match spec {
        ProblemSpec::Quartic1d => wrap(name, Manifold::euclidean(1), Smoothness::Analytic, Quartic1d, Quartic1d),
        ProblemSpec::NewtonTrap => wrap(name, Manifold::euclidean(2), Smoothness::Analytic, NewtonTrap, NewtonTrap),
        ProblemSpec::Circle => wrap(name, Manifold::euclidean(2), Smoothness::Analytic, Circle, Circle),
        ProblemSpec::AnisoQuad { a, b } => {
            let q = AnisoQuad::new(*a, *b)?;
            wrap(name, Manifold::euclidean(3), Smoothness::Analytic, q.clone(), q)
        }
        ProblemSpec::CrossC1 => wrap(name, Manifold::euclidean(2), Smoothness::C1, CrossC1, CrossC1),
        ProblemSpec::QgNotEb => wrap(name, Manifold::euclidean(1), Smoothness::C1, QgNotEb, QgNotEb),
        ProblemSpec::Quadratic { diag } => {
            let q = Quadratic::new(diag.clone())?;
            wrap(name, Manifold::euclidean(diag.len()), Smoothness::Analytic, q.clone(), q)
        }
        ProblemSpec::OverparamRegression { m, n, seed } => {
            let r = Arc::new(OverparamRegression::generate(*m, *n, *seed)?);
            Problem::new(name, Manifold::euclidean(*m), Smoothness::Analytic, r.clone(), Some(r))
        }
        ProblemSpec::BurerMonteiro { p, r, seed } => {
            let b = Arc::new(BurerMonteiro::generate(*p, *r, *seed)?);
            Problem::new(name, Manifold::euclidean(p * r), Smoothness::Analytic, b.clone(), Some(b))
        }
        ProblemSpec::SphereBand => wrap(
            name,
            Manifold::sphere(3, RetractionKind::MetricProjection),
            Smoothness::Analytic,
            SphereBand,
            SphereBand,
        ),
    })
}

/// Finite-difference agreement of the analytic derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub max_rel_err_grad: f64,
    /// `None` for C¹ problems.
    pub max_rel_err_hess: Option<f64>,
    pub pass: bool,
}

/// Threshold on both relative errors for [`check_derivatives`] to pass.
pub const DERIVATIVE_TOL: f64 = 1e-4;

/// Central differences along an orthonormal tangent basis, using the
/// retraction to stay on the manifold.
///
/// The gradient is compared with `(f(R(x, h b)) - f(R(x, -h b))) / 2h` and each
/// Hessian column with the tangential part of the centered difference of the
/// Riemannian gradient. Relative errors are `|fd - analytic| / (|analytic| + 1e-8)`.
pub fn check_derivatives(p: &Problem, x: &Point, h: f64) -> Result<DerivativeReport> {
    if !(1e-8..=1e-2).contains(&h) {
        return Err(Error::InvalidInput(format!("step h = {h:e} outside [1e-8, 1e-2]")));
    }
    let m = p.manifold();
    m.check_point(x)?;
    let basis = m.tangent_basis(x);
    let g = p.grad(x);
    let hess = if p.smoothness().has_hessian() {
        Some(p.hess(x)?)
    } else {
        None
    };

    let mut fd_grad = DVector::zeros(basis.ncols());
    let mut fd_hess = DMatrix::zeros(basis.ncols(), basis.ncols());
    for (j, b) in basis.column_iter().enumerate() {
        let b = b.into_owned();
        let xp = m.retract(x, &(&b * h))?;
        let xm = m.retract(x, &(&b * -h))?;
        fd_grad[j] = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
        if hess.is_some() {
            let dg = m.project_tangent(x, &((p.grad(&xp) - p.grad(&xm)) / (2.0 * h)));
            fd_hess.set_column(j, &basis.tr_mul(&dg));
        }
    }
    let an_grad = basis.tr_mul(&g);
    let rel = |diff: f64, scale: f64| diff / (scale + 1e-8);
    let max_rel_err_grad = rel((&fd_grad - &an_grad).norm(), an_grad.norm());
    let max_rel_err_hess = hess.map(|h| {
        let an = basis.transpose() * h * &basis;
        rel((&fd_hess - &an).norm(), an.norm())
    });
    let pass = max_rel_err_grad <= DERIVATIVE_TOL
        && max_rel_err_hess.is_none_or(|e| e <= DERIVATIVE_TOL);
    Ok(DerivativeReport {
        max_rel_err_grad,
        max_rel_err_hess,
        pass,
    })
}
