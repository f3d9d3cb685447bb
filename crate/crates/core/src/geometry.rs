//! Euclidean space and the unit sphere as Riemannian manifolds.
//!
//! Points and tangent vectors are stored in ambient coordinates. On the unit
//! sphere `S^{n-1} ⊂ R^n` a tangent vector at `x` is any `v` with `⟨v, x⟩ = 0`.
//! All operations are pure; the [`Manifold`] value is a small `Copy` descriptor.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Point in ambient coordinates.
pub type Point = DVector<f64>;
/// Tangent vector in ambient coordinates.
pub type Tangent = DVector<f64>;

/// Tolerance for the unit-norm and tangency invariants.
pub const MANIFOLD_TOL: f64 = 1e-12;

/// Distance below `PI` at which two sphere points count as antipodal.
const ANTIPODAL_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// `R^n`.
    Euclidean(usize),
    /// Unit sphere in `R^n` (intrinsic dimension `n - 1`).
    UnitSphere(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetractionKind {
    Exponential,
    /// `x + v` followed by the nearest-point projection onto the manifold.
    MetricProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
    pub retraction: RetractionKind,
    /// Constant with `dist(x, retract(x, v)) <= c_r * |v|`.
    pub c_r: f64,
}

impl Manifold {
    /// `R^n`; `x + v` is both the exponential map and the retraction.
    pub fn euclidean(n: usize) -> Self {
        Self {
            kind: ManifoldKind::Euclidean(n),
            retraction: RetractionKind::Exponential,
            c_r: 1.0,
        }
    }

    /// Unit sphere in `R^n`. Both retractions satisfy the distance bound with
    /// `c_r = 1`: the projection retraction moves by `atan(|v|) <= |v|`.
    pub fn sphere(n: usize, retraction: RetractionKind) -> Self {
        Self {
            kind: ManifoldKind::UnitSphere(n),
            retraction,
            c_r: 1.0,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean(n) | ManifoldKind::UnitSphere(n) => n,
        }
    }

    /// Dimension of each tangent space.
    pub fn dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean(n) => n,
            ManifoldKind::UnitSphere(n) => n.saturating_sub(1),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, ManifoldKind::Euclidean(_))
    }

    fn check_dim(&self, v: &DVector<f64>, what: &str) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "{what} has dimension {}, manifold ambient dimension is {}",
                v.len(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        self.check_dim(x, "point")?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("point has non-finite coordinates".into()));
        }
        if let ManifoldKind::UnitSphere(_) = self.kind {
            let err = (x.norm() - 1.0).abs();
            if err > MANIFOLD_TOL {
                return Err(Error::InvalidInput(format!(
                    "sphere point has norm off by {err:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn check_tangent(&self, x: &Point, v: &Tangent) -> Result<()> {
        self.check_dim(v, "tangent vector")?;
        if let ManifoldKind::UnitSphere(_) = self.kind {
            let err = x.dot(v).abs();
            if err > MANIFOLD_TOL * v.norm().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "vector is not tangent at the base point: <x, v> = {err:e}"
                )));
            }
        }
        Ok(())
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    pub fn project_tangent(&self, x: &Point, v: &DVector<f64>) -> Tangent {
        match self.kind {
            ManifoldKind::Euclidean(_) => v.clone(),
            ManifoldKind::UnitSphere(_) => v - x * x.dot(v),
        }
    }

    /// Nearest point of the manifold to an ambient point.
    pub fn project_point(&self, y: &DVector<f64>) -> Point {
        match self.kind {
            ManifoldKind::Euclidean(_) => y.clone(),
            ManifoldKind::UnitSphere(n) => {
                let r = y.norm();
                if r > 0.0 {
                    y / r
                } else {
                    let mut e = DVector::zeros(n);
                    e[0] = 1.0;
                    e
                }
            }
        }
    }

    /// Orthonormal basis of `T_x M` as the columns of an `ambient × dim` matrix.
    pub fn tangent_basis(&self, x: &Point) -> DMatrix<f64> {
        match self.kind {
            ManifoldKind::Euclidean(n) => DMatrix::identity(n, n),
            ManifoldKind::UnitSphere(n) => {
                // Householder reflection sending x to ±e_k; its other columns
                // span the orthogonal complement of x.
                let k = x.iamax();
                let mut w = x.clone();
                w[k] -= x[k].signum();
                let ww = w.norm_squared();
                let refl = if ww > 0.0 {
                    DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / ww)
                } else {
                    DMatrix::identity(n, n)
                };
                let cols: Vec<_> = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| refl.column(j).into_owned())
                    .collect();
                DMatrix::from_columns(&cols)
            }
        }
    }

    /// Riemannian distance.
    pub fn dist(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_dim(x, "point")?;
        self.check_dim(y, "point")?;
        Ok(match self.kind {
            ManifoldKind::Euclidean(_) => (x - y).norm(),
            ManifoldKind::UnitSphere(_) => {
                let chord = (x - y).norm();
                2.0 * (0.5 * chord).clamp(-1.0, 1.0).asin()
            }
        })
    }

    pub fn exp(&self, x: &Point, v: &Tangent) -> Result<Point> {
        self.check_dim(x, "point")?;
        self.check_dim(v, "tangent vector")?;
        Ok(match self.kind {
            ManifoldKind::Euclidean(_) => x + v,
            ManifoldKind::UnitSphere(_) => {
                let nv = v.norm();
                if nv == 0.0 {
                    x.clone()
                } else {
                    let y = x * nv.cos() + v * (nv.sin() / nv);
                    let r = y.norm();
                    y / r
                }
            }
        })
    }

    /// Inverse of [`Manifold::exp`] within the injectivity radius.
    pub fn log(&self, x: &Point, y: &Point) -> Result<Tangent> {
        self.check_dim(x, "point")?;
        self.check_dim(y, "point")?;
        match self.kind {
            ManifoldKind::Euclidean(_) => Ok(y - x),
            ManifoldKind::UnitSphere(_) => {
                let d = self.dist(x, y)?;
                if d > PI - ANTIPODAL_MARGIN {
                    return Err(Error::Domain(
                        "logarithm of (nearly) antipodal sphere points".into(),
                    ));
                }
                let w = y - x * x.dot(y);
                let nw = w.norm();
                if nw == 0.0 || d == 0.0 {
                    return Ok(DVector::zeros(x.len()));
                }
                Ok(w * (d / nw))
            }
        }
    }

    pub fn retract(&self, x: &Point, v: &Tangent) -> Result<Point> {
        match self.retraction {
            RetractionKind::Exponential => self.exp(x, v),
            RetractionKind::MetricProjection => {
                self.check_dim(x, "point")?;
                self.check_dim(v, "tangent vector")?;
                Ok(self.project_point(&(x + v)))
            }
        }
    }

    /// Parallel transport of `v` from `T_x M` to `T_y M` along the minimizing
    /// geodesic.
    pub fn transport(&self, x: &Point, y: &Point, v: &Tangent) -> Result<Tangent> {
        self.check_dim(v, "tangent vector")?;
        match self.kind {
            ManifoldKind::Euclidean(_) => {
                self.check_dim(x, "point")?;
                self.check_dim(y, "point")?;
                Ok(v.clone())
            }
            ManifoldKind::UnitSphere(_) => {
                let l = self.log(x, y)?;
                let d = l.norm();
                if d == 0.0 {
                    return Ok(v.clone());
                }
                let u = l / d;
                let a = u.dot(v);
                Ok(v + &u * ((d.cos() - 1.0) * a) - x * (d.sin() * a))
            }
        }
    }
}
