//! Numerical kernels shared by the spectral modules.

mod envelope;
mod krylov;
mod sparse;

pub use envelope::{envelope_size, inertia, reverse_cuthill_mckee, Inertia, DEFAULT_ENVELOPE_CAP};
pub use krylov::{lowest_eigenpairs, KrylovOptions};
pub use sparse::SymCsr;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Dense symmetric eigendecomposition, eigenvalues ascending.
pub fn dense_eigen(m: &Mat<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    if want_vectors {
        let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let vals = (0..m.nrows()).map(|i| eig.S()[i]).collect();
        Ok((vals, Some(eig.U().to_owned())))
    } else {
        let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
        Ok((vals, None))
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct SparseCholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SparseCholesky {
    /// Fails with [`Error::NotPositiveDefinite`] when a nonpositive pivot is
    /// met (the reported eigenvalue is then unknown and set to NaN).
    pub fn new(a: &SymCsr) -> Result<Self> {
        let m = a.to_faer()?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite { eigenvalue: f64::NAN })?;
        Ok(Self { n: a.dim(), llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_mat(&self, rhs: &Mat<f64>) -> Mat<f64> {
        self.llt.solve(rhs)
    }
}

/// Symmetric positive definite check via dense Cholesky.
pub fn dense_cholesky_ok(m: &Mat<f64>) -> bool {
    m.llt(Side::Lower).is_ok()
}

/// Lower Cholesky factor of a dense SPD matrix.
pub fn dense_cholesky_factor(m: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = m.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite { eigenvalue: f64::NAN })?;
    Ok(llt.L().to_owned())
}

/// Solves `m x = b` column by column for a dense SPD matrix.
pub fn dense_spd_solve(m: &Mat<f64>, b: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = m.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite { eigenvalue: f64::NAN })?;
    Ok(llt.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_cholesky_solves_and_rejects_indefinite() {
        let a = SymCsr::from_parts(&[2.0, 2.0, 2.0], &[(0, 1, -1.0), (1, 2, -1.0)]);
        let chol = SparseCholesky::new(&a).unwrap();
        let x = chol.solve(&[1.0, 0.0, 0.0]);
        let ax = a.matvec(&x);
        assert!((ax[0] - 1.0).abs() < 1e-14 && ax[1].abs() < 1e-14 && ax[2].abs() < 1e-14);
        let b = SymCsr::from_parts(&[1.0, -1.0], &[]);
        assert!(matches!(SparseCholesky::new(&b), Err(Error::NotPositiveDefinite { .. })));
    }
}
