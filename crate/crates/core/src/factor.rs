//! Sparse Cholesky factorization of symmetric positive definite operators.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Llt;
use faer::{Conj, Mat, MatMut, MatRef, Side};
use thiserror::Error;

use crate::sparse::SymmetricMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("matrix is not numerically positive definite")]
    NotPositiveDefinite,
    #[error("factorization failed: {0}")]
    Failed(String),
}

/// `A = L Lᵀ`, factored once and reused for many right-hand sides.
#[derive(Debug, Clone)]
pub struct Cholesky {
    llt: Llt<usize, f64>,
    dim: usize,
}

impl Cholesky {
    pub fn new(a: &SymmetricMatrix) -> Result<Self, FactorError> {
        let lower = a.to_faer_lower();
        let llt = lower.sp_cholesky(Side::Lower).map_err(|e| match e {
            faer::sparse::linalg::LltError::Numeric(_) => FactorError::NotPositiveDefinite,
            other => FactorError::Failed(format!("{other:?}")),
        })?;
        Ok(Self { llt, dim: a.dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, f64>) {
        assert_eq!(rhs.nrows(), self.dim);
        self.llt.solve_in_place_with_conj(Conj::No, rhs);
    }

    pub fn solve(&self, rhs: MatRef<'_, f64>) -> Mat<f64> {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.solve_in_place(x.as_mut());
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}
