//! Dense symmetric kernels: the generalized eigensolver used for the
//! coarsest level and the Rayleigh–Ritz projections, and M-orthonormalization
//! of vector blocks.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{get_global_parallelism, Mat, MatRef, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("eigendecomposition did not converge")]
    NoConvergence,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Ascending eigenvalues with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<DenseEigen, DenseError> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| DenseError::NoConvergence)?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(DenseEigen { values, vectors: evd.U().to_owned() })
}

/// Lowest `k` eigenpairs of `A x = λ B x` with `B` symmetric positive
/// definite. Eigenvectors are B-orthonormal.
pub fn generalized_eigen(a: MatRef<'_, f64>, b: MatRef<'_, f64>, k: usize) -> Result<DenseEigen, DenseError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(DenseError::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if k > n {
        return Err(DenseError::DimensionMismatch(format!("requested {k} pairs of a {n}-dimensional problem")));
    }
    let par = get_global_parallelism();
    let llt = b.llt(Side::Lower).map_err(|_| DenseError::NotPositiveDefinite)?;
    let l = llt.L();

    // C = L⁻¹ A L⁻ᵀ, formed as L⁻¹ (L⁻¹ A)ᵀ using the symmetry of A.
    let mut w = a.to_owned();
    solve_lower_triangular_in_place(l, w.as_mut(), par);
    let mut c = w.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), par);
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));

    let evd = symmetric_eigen(c.as_ref())?;
    let mut vectors = evd.vectors.subcols(0, k).to_owned();
    solve_upper_triangular_in_place(l.transpose(), vectors.as_mut(), par);
    Ok(DenseEigen { values: evd.values[..k].to_vec(), vectors })
}

/// `Xᵀ A X` for sparse `A`.
pub fn projected(a: &CsrMatrix, x: MatRef<'_, f64>) -> Mat<f64> {
    let ax = a.mul_dense(x);
    symmetric_part(x.transpose() * ax.as_ref())
}

pub fn symmetric_part(g: Mat<f64>) -> Mat<f64> {
    let n = g.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// Relative threshold below which a Gram eigenvalue counts as a lost
/// direction.
const RANK_TOLERANCE: f64 = 1e-12;

/// Outcome of [`m_orthonormalize`].
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub block: Mat<f64>,
    /// Columns that had to be replaced by random directions.
    pub replaced: usize,
}

/// Returns a block spanning (at least) the column space of `x` with
/// `Yᵀ M Y = I`. Directions lost to rank deficiency are replaced by random
/// vectors, so the block size is preserved.
pub fn m_orthonormalize<R: Rng>(x: MatRef<'_, f64>, m: &CsrMatrix, rng: &mut R) -> Orthonormalized {
    // Inverse iteration leaves column norms spread over many orders of
    // magnitude; equilibrating first keeps the Gram matrix well conditioned.
    let x = normalize_columns(x, m);
    let (block, replaced) = whiten(x.as_ref(), m, rng);
    // A second pass cleans up the loss of orthogonality of the first.
    let (block, again) = whiten(block.as_ref(), m, rng);
    Orthonormalized { block, replaced: replaced + again }
}

/// M-orthonormal basis of the column space of `x`; numerically dependent
/// directions are dropped, so the result may have fewer columns.
pub fn m_orthonormal_basis(x: MatRef<'_, f64>, m: &CsrMatrix) -> Mat<f64> {
    let mut y = normalize_columns(x, m);
    for _ in 0..2 {
        let gram = projected(m, y.as_ref());
        let Ok(evd) = symmetric_eigen(gram.as_ref()) else {
            return Mat::zeros(x.nrows(), 0);
        };
        let largest = evd.values.iter().copied().fold(0.0_f64, f64::max);
        if !(largest > 0.0) || !largest.is_finite() {
            return Mat::zeros(x.nrows(), 0);
        }
        let keep: Vec<usize> = (0..y.ncols()).filter(|&j| evd.values[j] > 1e-10 * largest).collect();
        let scaled = Mat::from_fn(y.ncols(), keep.len(), |i, c| evd.vectors[(i, keep[c])] / evd.values[keep[c]].sqrt());
        y = y.as_ref() * scaled.as_ref();
    }
    y
}

fn normalize_columns(x: MatRef<'_, f64>, m: &CsrMatrix) -> Mat<f64> {
    let mx = m.mul_dense(x);
    let mut out = x.to_owned();
    for j in 0..x.ncols() {
        let sq: f64 = x.col(j).iter().zip(mx.col(j).iter()).map(|(a, b)| a * b).sum();
        if sq > 0.0 && sq.is_finite() {
            let s = sq.sqrt().recip();
            out.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
    }
    out
}

fn whiten<R: Rng>(x: MatRef<'_, f64>, m: &CsrMatrix, rng: &mut R) -> (Mat<f64>, usize) {
    let n = x.nrows();
    let k = x.ncols();
    if k == 0 {
        return (x.to_owned(), 0);
    }
    let gram = projected(m, x);
    let evd = match symmetric_eigen(gram.as_ref()) {
        Ok(e) => e,
        Err(_) => return (random_m_orthonormal(n, k, m, None, rng), k),
    };
    let largest = evd.values.iter().copied().fold(0.0_f64, f64::max);
    if !(largest > 0.0) || !largest.is_finite() {
        return (random_m_orthonormal(n, k, m, None, rng), k);
    }
    let keep: Vec<usize> = (0..k).filter(|&j| evd.values[j] > RANK_TOLERANCE * largest).collect();
    let mut scaled = Mat::<f64>::zeros(k, keep.len());
    for (c, &j) in keep.iter().enumerate() {
        let s = evd.values[j].sqrt().recip();
        for i in 0..k {
            scaled[(i, c)] = evd.vectors[(i, j)] * s;
        }
    }
    let kept = x * scaled.as_ref();
    let missing = k - keep.len();
    if missing == 0 {
        return (kept, 0);
    }
    log::warn!("rank deficiency: replacing {missing} of {k} block columns with random vectors");
    let fill = random_m_orthonormal(n, missing, m, Some(kept.as_ref()), rng);
    let mut out = Mat::<f64>::zeros(n, k);
    out.subcols_mut(0, keep.len()).copy_from(kept.as_ref());
    out.subcols_mut(keep.len(), missing).copy_from(fill.as_ref());
    (out, missing)
}

/// Random block, M-orthogonal to the (M-orthonormal) `against` block and
/// M-orthonormal itself. Uses repeated Gram–Schmidt.
pub fn random_m_orthonormal<R: Rng>(
    n: usize,
    k: usize,
    m: &CsrMatrix,
    against: Option<MatRef<'_, f64>>,
    rng: &mut R,
) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(n, k);
    let mut mv = vec![0.0; n];
    let mut filled = 0;
    let mut attempts = 0;
    while filled < k && attempts < 10 * (k + 1) {
        attempts += 1;
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            if let Some(b) = against {
                project_out(&mut v, b, m, &mut mv);
            }
            project_out(&mut v, out.subcols(0, filled), m, &mut mv);
        }
        m.mul_vec(&v, &mut mv);
        let norm = dot(&v, &mv).sqrt();
        if !(norm > 1e-10) {
            continue;
        }
        for (i, vi) in v.iter().enumerate() {
            out[(i, filled)] = vi / norm;
        }
        filled += 1;
    }
    out
}

fn project_out(v: &mut [f64], basis: MatRef<'_, f64>, m: &CsrMatrix, mv: &mut [f64]) {
    if basis.ncols() == 0 {
        return;
    }
    m.mul_vec(v, mv);
    for j in 0..basis.ncols() {
        let col = basis.col(j);
        let c: f64 = col.iter().zip(mv.iter()).map(|(a, b)| a * b).sum();
        for (vi, bi) in v.iter_mut().zip(col.iter()) {
            *vi -= c * bi;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn column(x: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    x.col(j).iter().copied().collect()
}

/// Largest entry of `|Xᵀ M X − I|`.
pub fn orthonormality_error(x: MatRef<'_, f64>, m: &CsrMatrix) -> f64 {
    let g = projected(m, x);
    let mut worst = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Cosines of the principal angles between the M-orthonormal blocks `a` and
/// `b`, in descending order.
pub fn principal_cosines(a: MatRef<'_, f64>, b: MatRef<'_, f64>, m: &CsrMatrix) -> Vec<f64> {
    let mb = m.mul_dense(b);
    let cross = a.transpose() * mb.as_ref();
    let svd = cross.thin_svd().expect("svd of a small block");
    let mut s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.min(1.0)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest principal angle (radians) between two M-orthonormal blocks.
pub fn max_principal_angle(a: MatRef<'_, f64>, b: MatRef<'_, f64>, m: &CsrMatrix) -> f64 {
    let cos = principal_cosines(a, b, m);
    let smallest = cos.last().copied().unwrap_or(1.0).clamp(-1.0, 1.0);
    // acos loses accuracy near 1; use the sine form.
    (1.0 - smallest * smallest).max(0.0).sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generalized_diagonal_problem() {
        let a = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { i as f64 } else { 0.0 });
        let b = Mat::<f64>::identity(3, 3);
        let e = generalized_eigen(a.as_ref(), b.as_ref(), 2).unwrap();
        assert!((e.values[0] - 0.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(1, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_residuals_are_tiny() {
        let n = 12;
        let a = Mat::<f64>::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let b = Mat::<f64>::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.1 / (1.0 + (i as f64 - j as f64).abs()) });
        let e = generalized_eigen(a.as_ref(), b.as_ref(), n).unwrap();
        let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0_f64, |m, (i, j)| m.max(a[(i, j)].abs()));
        for k in 0..n {
            let x = e.vectors.col(k);
            let r = &a * x - (&b * x) * faer::Scale(e.values[k]);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rn < 1e-10 * scale, "pair {k} residual {rn}");
        }
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn not_positive_definite_mass_rejected() {
        let a = Mat::<f64>::identity(2, 2);
        let b = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert_eq!(generalized_eigen(a.as_ref(), b.as_ref(), 1).unwrap_err(), DenseError::NotPositiveDefinite);
    }

    #[test]
    fn orthonormalize_repairs_rank_deficiency() {
        let n = 20;
        let m = CsrMatrix::from_diagonal(&(0..n).map(|i| 1.0 + i as f64 / 10.0).collect::<Vec<_>>());
        // Two identical columns and one zero column.
        let x = Mat::<f64>::from_fn(n, 3, |i, j| if j < 2 { (i as f64).sin() } else { 0.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = m_orthonormalize(x.as_ref(), &m, &mut rng);
        assert_eq!(out.block.ncols(), 3);
        assert_eq!(out.replaced, 2);
        assert!(orthonormality_error(out.block.as_ref(), &m) < 1e-12);
    }

    #[test]
    fn principal_angle_of_identical_spans_is_zero() {
        let n = 8;
        let m = CsrMatrix::identity(n);
        let x = Mat::<f64>::from_fn(n, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let rot = Mat::<f64>::from_fn(n, 2, |i, j| match (i, j) {
            (0, 0) | (1, 0) => std::f64::consts::FRAC_1_SQRT_2,
            (0, 1) => std::f64::consts::FRAC_1_SQRT_2,
            (1, 1) => -std::f64::consts::FRAC_1_SQRT_2,
            _ => 0.0,
        });
        assert!(max_principal_angle(x.as_ref(), rot.as_ref(), &m) < 1e-8);
    }
}
