//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending
/// order. Column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(h: &DMatrix<f64>) -> Self {
        let n = h.nrows();
        if n == 0 {
            return Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let sym = symmetrize(h);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute eigenvalue (the spectral norm).
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Coordinates of `v` in the eigenbasis.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.vectors.tr_mul(v)
    }
}

pub fn symmetrize(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

/// Maximum absolute asymmetry `max |h_ij - h_ji|`.
pub fn asymmetry(h: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in 0..i {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

/// Numerical rank threshold `eps_r * max(1, lambda_max)`.
pub const RANK_TOL: f64 = 1e-7;

pub fn rank_threshold(spectral_norm: f64) -> f64 {
    RANK_TOL * spectral_norm.max(1.0)
}

/// Residual `a x + b` accumulated with error-free transformations
/// (two-product via FMA, two-sum), then rounded once.
pub fn compensated_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.nrows(),
        (0..a.nrows()).map(|i| {
            let mut hi = b[i];
            let mut lo = 0.0;
            for j in 0..a.ncols() {
                let p = a[(i, j)] * x[j];
                let pe = a[(i, j)].mul_add(x[j], -p);
                let s = hi + p;
                let bb = s - hi;
                let se = (hi - (s - bb)) + (p - bb);
                hi = s;
                lo += pe + se;
            }
            hi + lo
        }),
    )
}

/// Orthonormal basis (as columns) of the range of `m`, using singular values
/// above `tol * max(1, sigma_max)`.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd computed u");
    let smax = svd.singular_values.max();
    let cut = tol * smax.max(1.0);
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
