//! Burer–Monteiro factorization of a fixed positive semidefinite target.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Cost, SolutionSet};
use crate::geometry::Point;
use crate::{Error, Result};

/// `f(Y) = |Y Y^T - M|_F^2 / 2` with `M = Y* Y*^T`, over `Y ∈ R^{p×r}`
/// flattened row-major.
///
/// Minimizers are the orbit `{Y* Q : Q ∈ O(r)}`, of dimension `r(r-1)/2`.
#[derive(Debug, Clone)]
pub struct BurerMonteiro {
    p: usize,
    r: usize,
    y_star: DMatrix<f64>,
    target: DMatrix<f64>,
}

impl BurerMonteiro {
    pub fn generate(p: usize, r: usize, seed: u64) -> Result<Self> {
        if r == 0 || p < r {
            return Err(Error::InvalidInput(format!(
                "burer_monteiro needs p >= r >= 1, got p = {p}, r = {r}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y_star = DMatrix::from_fn(p, r, |_, _| StandardNormal.sample(&mut rng));
        if y_star.clone().svd(false, false).singular_values.min() <= 1e-6 {
            return Err(Error::InvalidInput(format!("seed {seed} produced a rank-deficient Y*")));
        }
        let target = &y_star * y_star.transpose();
        Ok(Self { p, r, y_star, target })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.p, self.r)
    }

    pub fn y_star(&self) -> &DMatrix<f64> {
        &self.y_star
    }

    /// Flattened `Y*`.
    pub fn x_star(&self) -> DVector<f64> {
        self.flatten(&self.y_star)
    }

    pub fn unflatten(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.r, x.as_slice())
    }

    pub fn flatten(&self, y: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.p * self.r, y.transpose().iter().copied())
    }

    /// Orthogonal Procrustes: `Y* Q` with `Q = U V^T` from the SVD of `Y*^T Y`.
    fn nearest(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let svd = (self.y_star.transpose() * y).svd(true, true);
        let q = svd.u.expect("u") * svd.v_t.expect("v_t");
        &self.y_star * q
    }
}

impl Cost for BurerMonteiro {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let y = self.unflatten(x);
        0.5 * (&y * y.transpose() - &self.target).norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = self.unflatten(x);
        let e = &y * y.transpose() - &self.target;
        self.flatten(&((e * &y) * 2.0))
    }
    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let y = self.unflatten(x);
        let e = &y * y.transpose() - &self.target;
        let dim = self.p * self.r;
        let mut h = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut dir = DMatrix::zeros(self.p, self.r);
            dir[(k / self.r, k % self.r)] = 1.0;
            let sym = &dir * y.transpose() + &y * dir.transpose();
            let col = (sym * &y + &e * &dir) * 2.0;
            h.set_column(k, &self.flatten(&col));
        }
        Some(crate::linalg::symmetrize(&h))
    }
}

impl SolutionSet for BurerMonteiro {
    fn f_star(&self) -> f64 {
        0.0
    }
    fn dist(&self, x: &Point) -> f64 {
        let y = self.unflatten(x);
        (self.nearest(&y) - y).norm()
    }
    fn project(&self, x: &Point) -> Point {
        self.flatten(&self.nearest(&self.unflatten(x)))
    }
    fn dim(&self) -> usize {
        self.r * (self.r - 1) / 2
    }
    fn hessian_rank(&self) -> usize {
        self.p * self.r - self.dim()
    }
}
