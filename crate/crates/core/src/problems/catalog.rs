//! Closed-form catalog entries. Each type is both the cost and its
//! solution-set oracle.

use nalgebra::{DMatrix, DVector};

use super::{Cost, SolutionSet};
use crate::geometry::Point;
use crate::{Error, Result};

fn vec(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// `f(x) = x^4`. Flat minimum at the origin: not PL, Łojasiewicz with θ = 3/4.
#[derive(Debug, Clone, Copy)]
pub struct Quartic1d;

impl Cost for Quartic1d {
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0].powi(4)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        vec(&[4.0 * x[0].powi(3)])
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 12.0 * x[0] * x[0]))
    }
}

impl SolutionSet for Quartic1d {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        x[0].abs()
    }
    fn project(&self, _x: &Point) -> Point {
        vec(&[0.0])
    }
    fn dim(&self) -> usize {
        0
    }
    fn hessian_rank(&self) -> usize {
        0
    }
}

/// `f(x, y) = (x^2 + 1) y^2 / 2`. Morse–Bott along the x-axis, yet a full
/// Newton step from near `S` can land arbitrarily far away.
#[derive(Debug, Clone, Copy)]
pub struct NewtonTrap;

impl Cost for NewtonTrap {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x[0] * x[0] + 1.0) * x[1] * x[1]
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b) = (x[0], x[1]);
        vec(&[a * b * b, (a * a + 1.0) * b])
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (a, b) = (x[0], x[1]);
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[b * b, 2.0 * a * b, 2.0 * a * b, a * a + 1.0],
        ))
    }
}

impl SolutionSet for NewtonTrap {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        x[1].abs()
    }
    fn project(&self, x: &Point) -> Point {
        vec(&[x[0], 0.0])
    }
    fn dim(&self) -> usize {
        1
    }
    fn hessian_rank(&self) -> usize {
        1
    }
}

/// `f(x, y) = (x^2 + y^2 - 1)^2`. Minimizers on the unit circle.
#[derive(Debug, Clone, Copy)]
pub struct Circle;

impl Cost for Circle {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let e = x.norm_squared() - 1.0;
        e * e
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * (4.0 * (x.norm_squared() - 1.0))
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = x.len();
        Some(
            DMatrix::identity(n, n) * (4.0 * (x.norm_squared() - 1.0))
                + (x * x.transpose()) * 8.0,
        )
    }
}

impl SolutionSet for Circle {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        (x.norm() - 1.0).abs()
    }
    fn project(&self, x: &Point) -> Point {
        let r = x.norm();
        if r > 0.0 {
            x / r
        } else {
            let mut e = DVector::zeros(x.len());
            e[0] = 1.0;
            e
        }
    }
    fn dim(&self) -> usize {
        1
    }
    fn hessian_rank(&self) -> usize {
        1
    }
}

/// Diagonal quadratic `sum_i d_i x_i^2 / 2` with `d_i >= 0`. The solution set
/// is the coordinate subspace where `d_i = 0`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: DVector<f64>,
}

impl Quadratic {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("quadratic needs at least one coordinate".into()));
        }
        if diag.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidInput(
                "quadratic coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            diag: DVector::from_vec(diag),
        })
    }

    pub fn diag(&self) -> &DVector<f64> {
        &self.diag
    }
}

impl Cost for Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.iter().zip(self.diag.iter()).map(|(xi, d)| d * xi * xi).sum::<f64>()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.diag)
    }
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&self.diag))
    }
}

impl SolutionSet for Quadratic {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        x.iter()
            .zip(self.diag.iter())
            .filter(|(_, d)| **d > 0.0)
            .map(|(xi, _)| xi * xi)
            .sum::<f64>()
            .sqrt()
    }
    fn project(&self, x: &Point) -> Point {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.diag.iter())
                .map(|(xi, d)| if *d > 0.0 { 0.0 } else { *xi }),
        )
    }
    fn dim(&self) -> usize {
        self.diag.iter().filter(|d| **d == 0.0).count()
    }
    fn hessian_rank(&self) -> usize {
        self.diag.len() - self.dim()
    }
}

/// `f(x, y, z) = (a y^2 + b z^2) / 2`: Morse–Bott along the x-axis with
/// `mu = a` and `lambda_max = b`.
#[derive(Debug, Clone)]
pub struct AnisoQuad(Quadratic);

impl AnisoQuad {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "aniso_quad needs 0 < a <= b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self(Quadratic::new(vec![0.0, a, b])?))
    }
}

impl Cost for AnisoQuad {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.gradient(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.0.hessian(x)
    }
}

impl SolutionSet for AnisoQuad {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        self.0.dist(x)
    }
    fn project(&self, x: &Point) -> Point {
        self.0.project(x)
    }
    fn dim(&self) -> usize {
        1
    }
    fn hessian_rank(&self) -> usize {
        2
    }
}

/// `f(x, y) = x^2 y^2 / (x^2 + y^2)` with `f(0) = 0`. Only C¹ at the origin;
/// PL with constant 1/2 yet its minimizers form a cross.
#[derive(Debug, Clone, Copy)]
pub struct CrossC1;

impl Cost for CrossC1 {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let (a2, b2) = (x[0] * x[0], x[1] * x[1]);
        let s = a2 + b2;
        if s == 0.0 {
            0.0
        } else {
            a2 * b2 / s
        }
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b) = (x[0], x[1]);
        let s = a * a + b * b;
        if s == 0.0 {
            return vec(&[0.0, 0.0]);
        }
        let s2 = s * s;
        vec(&[2.0 * a * b.powi(4) / s2, 2.0 * a.powi(4) * b / s2])
    }
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

impl SolutionSet for CrossC1 {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        x[0].abs().min(x[1].abs())
    }
    fn project(&self, x: &Point) -> Point {
        if x[0].abs() <= x[1].abs() {
            vec(&[0.0, x[1]])
        } else {
            vec(&[x[0], 0.0])
        }
    }
    fn dim(&self) -> usize {
        1
    }
    fn hessian_rank(&self) -> usize {
        0
    }
    /// Both axes pass within `radius` of `x` only near the origin.
    fn branches_near(&self, x: &Point, radius: f64) -> usize {
        usize::from(x[0].abs() <= radius) + usize::from(x[1].abs() <= radius)
    }
}

/// `f(x) = 2x^2 + x^2 sin(|x|^{-1/2})`, `f(0) = 0`. C¹, quadratic growth
/// (`f >= x^2`) but spurious local minima accumulate at 0.
#[derive(Debug, Clone, Copy)]
pub struct QgNotEb;

impl Cost for QgNotEb {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let t = x[0];
        if t == 0.0 {
            return 0.0;
        }
        let u = t.abs().sqrt().recip();
        t * t * (2.0 + u.sin())
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let t = x[0];
        if t == 0.0 {
            return vec(&[0.0]);
        }
        let r = t.abs().sqrt();
        let u = r.recip();
        vec(&[4.0 * t + 2.0 * t * u.sin() - 0.5 * t.signum() * r * u.cos()])
    }
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

impl SolutionSet for QgNotEb {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        x[0].abs()
    }
    fn project(&self, _x: &Point) -> Point {
        vec(&[0.0])
    }
    fn dim(&self) -> usize {
        0
    }
    fn hessian_rank(&self) -> usize {
        0
    }
}

/// `f(x) = x_3^2` restricted to the unit sphere in `R^3`; `S` is the equator.
#[derive(Debug, Clone, Copy)]
pub struct SphereBand;

impl Cost for SphereBand {
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[2] * x[2]
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        vec(&[0.0, 0.0, 2.0 * x[2]])
    }
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&vec(&[0.0, 0.0, 2.0])))
    }
}

impl SolutionSet for SphereBand {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        let planar = (x[0] * x[0] + x[1] * x[1]).sqrt();
        x[2].abs().atan2(planar)
    }
    fn project(&self, x: &Point) -> Point {
        let planar = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if planar > 0.0 {
            vec(&[x[0] / planar, x[1] / planar, 0.0])
        } else {
            vec(&[1.0, 0.0, 0.0])
        }
    }
    fn dim(&self) -> usize {
        1
    }
    fn hessian_rank(&self) -> usize {
        1
    }
}
