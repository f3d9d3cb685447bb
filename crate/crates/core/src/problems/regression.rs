//! Over-parameterized nonlinear regression in the interpolation regime.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Cost, SolutionSet};
use crate::geometry::Point;
use crate::{Error, Result};

/// `f(x) = |F(x) - b|^2 / 2` with `F(x)_i = (A x)_i + x^T Q_i x / 2`,
/// `A ∈ R^{n×m}`, `m > n`, and `b = F(x*)`.
///
/// The solution set near `x*` is the fiber `{F = b}`, a submanifold of
/// dimension `m - n` on which the Hessian `J^T J` has rank `n`. Distances to
/// the fiber are computed numerically (see [`OverparamRegression::nearest`]).
#[derive(Debug, Clone)]
pub struct OverparamRegression {
    a: DMatrix<f64>,
    q: Vec<DMatrix<f64>>,
    b: DVector<f64>,
    x_star: DVector<f64>,
}

const QUADRATIC_SCALE: f64 = 0.5;
const PROJECTION_TOL: f64 = 1e-12;

impl OverparamRegression {
    pub fn generate(m: usize, n: usize, seed: u64) -> Result<Self> {
        if n == 0 || m <= n {
            return Err(Error::InvalidInput(format!(
                "overparam_regression needs m > n >= 1, got m = {m}, n = {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = DMatrix::from_fn(n, m, |_, _| normal() / (m as f64).sqrt());
        let q = (0..n)
            .map(|_| {
                let g = DMatrix::from_fn(m, m, |_, _| normal());
                (&g + g.transpose()) * (0.5 * QUADRATIC_SCALE / (m as f64).sqrt())
            })
            .collect();
        let x_star = DVector::from_fn(m, |_, _| 0.5 * normal());
        let mut out = Self {
            a,
            q,
            b: DVector::zeros(n),
            x_star,
        };
        out.b = out.map(&out.x_star);
        let sv = out.jacobian(&out.x_star).singular_values();
        if sv.min() <= 1e-8 {
            return Err(Error::InvalidInput(format!(
                "seed {seed} produced a rank-deficient Jacobian at x*"
            )));
        }
        Ok(out)
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `F(x)`.
    pub fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.a * x;
        for (i, qi) in self.q.iter().enumerate() {
            out[i] += 0.5 * x.dot(&(qi * x));
        }
        out
    }

    /// Jacobian of `F`: row `i` is `A_i + (Q_i x)^T`.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.a.clone();
        for (i, qi) in self.q.iter().enumerate() {
            let row = qi * x;
            for c in 0..self.m() {
                j[(i, c)] += row[c];
            }
        }
        j
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        self.map(x) - &self.b
    }

    /// Minimum-norm Gauss–Newton correction `-J^T (J J^T)^{-1} r`.
    fn gauss_newton_step(&self, z: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        let j = self.jacobian(z);
        let jjt = &j * j.transpose();
        let y = jjt.cholesky()?.solve(r);
        Some(-(j.transpose() * y))
    }

    /// Nearest point of the fiber `{F = b}` to `x`.
    ///
    /// Damped Gauss–Newton first lands on the fiber; Newton iterations on the
    /// KKT system `z - x + J(z)^T λ = 0, F(z) = b` then move along it to the
    /// orthogonal foot point.
    pub fn nearest(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let n = self.n();
        let mut z = x.clone();
        let mut r = self.residual(&z);
        for _ in 0..200 {
            if r.norm() <= PROJECTION_TOL * (1.0 + self.b.norm()) * 1e-3 {
                break;
            }
            let Some(step) = self.gauss_newton_step(&z, &r) else {
                break;
            };
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-8 {
                let cand = &z + &step * t;
                let rc = self.residual(&cand);
                if rc.norm() < r.norm() {
                    z = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        let j = self.jacobian(&z);
        let jjt = &j * j.transpose();
        let mut lambda = match jjt.clone().cholesky() {
            Some(c) => -c.solve(&(&j * (&z - x))),
            None => DVector::zeros(n),
        };
        for _ in 0..50 {
            let j = self.jacobian(&z);
            let r1 = &z - x + j.transpose() * &lambda;
            let r2 = self.residual(&z);
            let mut kkt = DMatrix::zeros(m + n, m + n);
            let mut top = DMatrix::identity(m, m);
            for (li, qi) in lambda.iter().zip(&self.q) {
                top += qi * *li;
            }
            kkt.view_mut((0, 0), (m, m)).copy_from(&top);
            kkt.view_mut((0, m), (m, n)).copy_from(&j.transpose());
            kkt.view_mut((m, 0), (n, m)).copy_from(&j);
            let mut rhs = DVector::zeros(m + n);
            rhs.rows_mut(0, m).copy_from(&(-r1));
            rhs.rows_mut(m, n).copy_from(&(-r2));
            let Some(delta) = kkt.lu().solve(&rhs) else {
                break;
            };
            let dz = delta.rows(0, m).into_owned();
            z += &dz;
            lambda += delta.rows(m, n);
            if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        z
    }
}

impl Cost for OverparamRegression {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.jacobian(x).transpose() * self.residual(x)
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let j = self.jacobian(x);
        let r = self.residual(x);
        let mut h = j.transpose() * &j;
        for (ri, qi) in r.iter().zip(&self.q) {
            h += qi * *ri;
        }
        Some(crate::linalg::symmetrize(&h))
    }
}

impl SolutionSet for OverparamRegression {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        (self.nearest(x) - x).norm()
    }
    fn project(&self, x: &Point) -> Point {
        self.nearest(x)
    }
    fn dim(&self) -> usize {
        self.m() - self.n()
    }
    fn hessian_rank(&self) -> usize {
        self.n()
    }
}
