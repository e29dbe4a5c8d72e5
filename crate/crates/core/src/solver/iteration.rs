use faer::{Mat, MatRef};
use rand::Rng;
use rayon::prelude::*;

use super::SolverError;
use crate::dense::{generalized_eigen, m_orthonormalize, projected, symmetric_eigen, Orthonormalized};
use crate::factor::Cholesky;
use crate::sparse::CsrMatrix;

/// Ritz values (ascending) with their vectors.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
    /// Columns replaced by random directions during orthonormalization.
    pub replaced: usize,
}

/// Lowest `k` pairs of the dense coarse problem.
pub fn solve_coarsest(stiffness: MatRef<'_, f64>, mass: MatRef<'_, f64>, k: usize) -> Result<RitzPairs, SolverError> {
    let eig = generalized_eigen(stiffness, mass, k)?;
    Ok(RitzPairs { values: eig.values, vectors: eig.vectors, replaced: 0 })
}

/// `(S + σM)⁻¹ M X`, M-orthonormalized. `factor` holds `S + σM`.
pub fn subspace_iteration_step<R: Rng>(factor: &Cholesky, mass: &CsrMatrix, x: MatRef<'_, f64>, rng: &mut R) -> Orthonormalized {
    let mut y = mass.mul_dense(x);
    factor.solve_in_place(y.as_mut());
    m_orthonormalize(y.as_ref(), mass, rng)
}

/// Rayleigh–Ritz on the span of `x`.
pub fn rayleigh_ritz<R: Rng>(stiffness: &CsrMatrix, mass: &CsrMatrix, x: MatRef<'_, f64>, rng: &mut R) -> Result<RitzPairs, SolverError> {
    let orth = m_orthonormalize(x, mass, rng);
    let mut pairs = rayleigh_ritz_orthonormal(stiffness, orth.block.as_ref())?;
    pairs.replaced += orth.replaced;
    Ok(pairs)
}

/// Rayleigh–Ritz for a block already M-orthonormal, where the projected
/// mass matrix is the identity.
pub(crate) fn rayleigh_ritz_orthonormal(stiffness: &CsrMatrix, y: MatRef<'_, f64>) -> Result<RitzPairs, SolverError> {
    let a = projected(stiffness, y);
    let eig = symmetric_eigen(a.as_ref())?;
    let vectors = y * eig.vectors.as_ref();
    Ok(RitzPairs { values: eig.values, vectors, replaced: 0 })
}

/// True when the first `p` values changed by at most `tolerance`
/// relative to `max(θ_curr, λ_floor)`, with `λ_floor = 1e-8·θ_p`.
pub fn convergence_test(prev: &[f64], curr: &[f64], p: usize, tolerance: f64) -> bool {
    let p = p.min(prev.len()).min(curr.len());
    if p == 0 {
        return true;
    }
    let floor = 1e-8 * curr[p - 1].abs();
    (0..p).all(|i| {
        let denom = curr[i].max(floor);
        let change = (curr[i] - prev[i]).abs();
        change == 0.0 || change <= tolerance * denom
    })
}

/// Davis–Kahan estimate of the angle between each of the first `p` Ritz
/// vectors and the true invariant subspace: `‖Sφ − θMφ‖_{M⁻¹} / (θ_k − θ)`,
/// with `θ_k` the largest Ritz value of the block standing in for the
/// spectrum the block does not resolve. The `M⁻¹` norm uses the diagonal of
/// `M`, which is exact for a lumped mass matrix.
pub fn ritz_angle_estimates(stiffness: &CsrMatrix, mass: &CsrMatrix, values: &[f64], vectors: MatRef<'_, f64>, p: usize) -> Vec<f64> {
    let p = p.min(values.len());
    let Some(&top) = values.last() else {
        return Vec::new();
    };
    let block = vectors.subcols(0, p);
    let sx = stiffness.mul_dense(block);
    let mx = mass.mul_dense(block);
    let diag = mass.diagonal();
    (0..p)
        .into_par_iter()
        .map(|j| {
            let gap = top - values[j];
            if !(gap > 0.0) {
                return f64::INFINITY;
            }
            let (s, m) = (sx.col(j), mx.col(j));
            let norm2: f64 = (0..s.nrows()).map(|i| (s[i] - values[j] * m[i]).powi(2) / diag[i]).sum();
            norm2.sqrt() / gap
        })
        .collect()
}

/// `‖Sφ − λMφ‖ / ‖λMφ‖` per pair; pairs with `λ ≤ 1e-8·max λ` use
/// `‖Sφ‖ / ‖Mφ‖` instead.
pub fn compute_residuals(stiffness: &CsrMatrix, mass: &CsrMatrix, values: &[f64], vectors: MatRef<'_, f64>) -> Vec<f64> {
    let sx = stiffness.mul_dense(vectors);
    let mx = mass.mul_dense(vectors);
    let top = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = 1e-8 * top;
    (0..values.len())
        .into_par_iter()
        .map(|j| {
            let lambda = values[j];
            let s = sx.col(j);
            let m = mx.col(j);
            if lambda > floor {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..s.nrows() {
                    let r = s[i] - lambda * m[i];
                    num += r * r;
                    den += (lambda * m[i]) * (lambda * m[i]);
                }
                (num / den).sqrt()
            } else {
                let num: f64 = s.iter().map(|v| v * v).sum();
                let den: f64 = m.iter().map(|v| v * v).sum();
                (num / den).sqrt()
            }
        })
        .collect()
}
