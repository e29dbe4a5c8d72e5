//! Comparison solvers: a dense oracle, a block preconditioned conjugate
//! gradient eigensolver, and the one-shot coarse approximation.

use std::time::{Duration, Instant};

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{construct_prolongation, galerkin_project, DistanceEngine};
use crate::dense::{generalized_eigen, m_orthonormal_basis, m_orthonormalize, projected, symmetric_eigen};
use crate::mesh::{EdgeGraph, TriangleMesh};
use crate::sampling::farthest_point_ordering;
use crate::solver::{compute_residuals, EigenSolution, SolverConfig, SolverError, SolverKind};
use crate::sparse::SymmetricMatrix;

/// Lowest `k` pairs by dense reduction. Refuses problems above
/// `threshold` unknowns.
pub fn dense_oracle(stiffness: &SymmetricMatrix, mass: &SymmetricMatrix, k: usize, threshold: usize) -> Result<EigenSolution, SolverError> {
    let n = stiffness.dim();
    if mass.dim() != n {
        return Err(SolverError::DimensionMismatch(format!("S is {n}x{n}, M is {0}x{0}", mass.dim())));
    }
    if n > threshold {
        return Err(SolverError::CoarseTooLarge { dim: n, threshold });
    }
    let eig = generalized_eigen(stiffness.to_dense().as_ref(), mass.to_dense().as_ref(), k)?;
    let residuals = compute_residuals(stiffness, mass, &eig.values, eig.vectors.as_ref());
    Ok(EigenSolution {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        residuals,
        converged: true,
        solver: SolverKind::Dense,
        config: serde_json::json!({ "k": k }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpcgOptions {
    /// Relative residual at which a pair counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stop early, unconverged, once this much wall time has passed.
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl Default for BpcgOptions {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iterations: 1000, time_budget: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpcgReport {
    pub iterations: usize,
    pub seconds: f64,
    pub converged_pairs: usize,
    pub timed_out: bool,
}

/// Locally optimal block preconditioned conjugate gradient iteration with
/// a Jacobi preconditioner. Converged columns are soft-locked: they stay in
/// the Rayleigh–Ritz basis but stop contributing search directions.
pub fn block_pcg_eigensolver(
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    k: usize,
    initial: Option<&Mat<f64>>,
    options: &BpcgOptions,
) -> Result<(EigenSolution, BpcgReport), SolverError> {
    let start = Instant::now();
    let n = stiffness.dim();
    if mass.dim() != n {
        return Err(SolverError::DimensionMismatch(format!("S is {n}x{n}, M is {0}x{0}", mass.dim())));
    }
    if k == 0 || 3 * k > n {
        return Err(SolverError::InvalidConfig(format!("block size {k} unsuitable for dimension {n}")));
    }
    let s = stiffness.as_csr();
    let m = mass.as_csr();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let inv_diag: Vec<f64> = s.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let x0 = match initial {
        Some(x) => x.clone(),
        None => Mat::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng)),
    };
    let x0 = m_orthonormalize(x0.as_ref(), m, &mut rng).block;
    let a = projected(s, x0.as_ref());
    let eig = symmetric_eigen(a.as_ref())?;
    let mut x = x0.as_ref() * eig.vectors.as_ref();
    let mut theta = eig.values;
    let mut p: Option<Mat<f64>> = None;

    let mut iterations = 0;
    let mut timed_out = false;
    let mut residuals;
    loop {
        residuals = compute_residuals(stiffness, mass, &theta, x.as_ref());
        let active: Vec<usize> = (0..k).filter(|&j| !(residuals[j] <= options.tolerance)).collect();
        if active.is_empty() || iterations >= options.max_iterations {
            break;
        }
        if let Some(budget) = options.time_budget {
            if start.elapsed() >= budget {
                timed_out = true;
                break;
            }
        }
        iterations += 1;

        let sx = s.mul_dense(x.as_ref());
        let mx = m.mul_dense(x.as_ref());
        let na = active.len();
        let mut w = Mat::from_fn(n, na, |i, c| {
            let j = active[c];
            inv_diag[i] * (sx[(i, j)] - theta[j] * mx[(i, j)])
        });
        let mut extra = na;
        if let Some(prev) = &p {
            extra += na;
            let mut wp = Mat::<f64>::zeros(n, 2 * na);
            wp.subcols_mut(0, na).copy_from(w.as_ref());
            for (c, &j) in active.iter().enumerate() {
                wp.col_mut(na + c).copy_from(prev.col(j));
            }
            w = wp;
        }
        debug_assert_eq!(w.ncols(), extra);
        // Remove the X component twice, then orthonormalize what is left.
        for _ in 0..2 {
            let coeff = mx.transpose() * w.as_ref();
            w = &w - x.as_ref() * coeff.as_ref();
        }
        let q = m_orthonormal_basis(w.as_ref(), m);
        let mut z = Mat::<f64>::zeros(n, k + q.ncols());
        z.subcols_mut(0, k).copy_from(x.as_ref());
        z.subcols_mut(k, q.ncols()).copy_from(q.as_ref());

        let a = projected(s, z.as_ref());
        let eig = symmetric_eigen(a.as_ref())?;
        let c = eig.vectors.subcols(0, k);
        x = z.as_ref() * c;
        if q.ncols() > 0 {
            p = Some(q.as_ref() * c.subrows(k, q.ncols()));
        }
        theta = eig.values[..k].to_vec();
    }

    let converged_pairs = residuals.iter().filter(|&&r| r <= options.tolerance).count();
    let converged = converged_pairs == k;
    let report = BpcgReport { iterations, seconds: start.elapsed().as_secs_f64(), converged_pairs, timed_out };
    let solution = EigenSolution {
        eigenvalues: theta,
        eigenvectors: x,
        residuals,
        converged,
        solver: SolverKind::Bpcg,
        config: serde_json::to_value(options).expect("options serialize"),
    };
    Ok((solution, report))
}

/// Single coarse level plus prolongation, solved once with no refinement.
/// `coarse_count` defaults to the coarsest hierarchy size for `config`.
pub fn coarse_one_shot(
    mesh: &TriangleMesh,
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    config: &SolverConfig,
    coarse_count: Option<usize>,
) -> Result<EigenSolution, SolverError> {
    config.validate()?;
    let n = mesh.vertex_count();
    let p = config.num_eigs;
    let count = coarse_count.unwrap_or_else(|| config.hierarchy.coarsest_size(p)).min(n);
    if count < config.block_size() {
        return Err(SolverError::InvalidConfig(format!("{count} coarse samples cannot carry {} Ritz vectors", config.block_size())));
    }
    if count > config.dense_threshold {
        return Err(SolverError::CoarseTooLarge { dim: count, threshold: config.dense_threshold });
    }
    let graph = EdgeGraph::from_mesh(mesh)?;
    let ordering = farthest_point_ordering(&graph, count, config.fps_seed)?;
    let engine = DistanceEngine::new(config.distance, mesh, &graph, None)?;
    let fine: Vec<usize> = (0..n).collect();
    let radius = ordering.radii[count - 1];
    let u = construct_prolongation(&engine, &ordering.order, radius, &fine, &config.basis)?;
    let (sc, mc) = galerkin_project(stiffness, mass, &u.matrix)?;
    let eig = generalized_eigen(sc.to_dense().as_ref(), mc.to_dense().as_ref(), p)?;
    let vectors = u.matrix.mul_dense(eig.vectors.as_ref());
    let residuals = compute_residuals(stiffness, mass, &eig.values, vectors.as_ref());
    Ok(EigenSolution {
        eigenvalues: eig.values,
        eigenvectors: vectors,
        residuals,
        converged: true,
        solver: SolverKind::Coarse,
        config: serde_json::json!({ "solver": config, "coarse_count": count }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::orthonormality_error;
    use crate::operators::LaplaceOperators;
    use crate::shapes;

    #[test]
    fn oracle_diagonal() {
        let s = SymmetricMatrix::from_diagonal(&[0.0, 3.0]);
        let m = SymmetricMatrix::identity(2);
        let sol = dense_oracle(&s, &m, 2, 10).unwrap();
        assert!(sol.eigenvalues[0].abs() < 1e-15);
        assert!((sol.eigenvalues[1] - 3.0).abs() < 1e-14);
        assert!(dense_oracle(&s, &m, 2, 1).is_err());
    }

    #[test]
    fn bpcg_matches_oracle_on_small_sphere() {
        let mesh = shapes::icosphere(3, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let oracle = dense_oracle(&ops.stiffness, &ops.mass, 10, 5000).unwrap();
        let opts = BpcgOptions { tolerance: 1e-8, ..Default::default() };
        let (sol, report) = block_pcg_eigensolver(&ops.stiffness, &ops.mass, 10, None, &opts).unwrap();
        assert!(sol.converged, "{report:?}");
        for i in 1..10 {
            assert!((sol.eigenvalues[i] - oracle.eigenvalues[i]).abs() < 1e-6 * oracle.eigenvalues[i]);
        }
        assert!(orthonormality_error(sol.eigenvectors.as_ref(), &ops.mass) < 1e-8);
    }

    #[test]
    fn bpcg_exact_start_converges_immediately() {
        let mesh = shapes::icosphere(2, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let oracle = dense_oracle(&ops.stiffness, &ops.mass, 8, 5000).unwrap();
        let opts = BpcgOptions { tolerance: 1e-6, ..Default::default() };
        let (sol, report) = block_pcg_eigensolver(&ops.stiffness, &ops.mass, 8, Some(&oracle.eigenvectors), &opts).unwrap();
        assert!(sol.converged);
        assert!(report.iterations <= 1);
    }

    #[test]
    fn one_shot_with_all_vertices_is_exact() {
        let mesh = shapes::icosphere(2, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let mut config = SolverConfig::new(10);
        config.buffer_factor = 1.0;
        let sol = coarse_one_shot(&mesh, &ops.stiffness, &ops.mass, &config, Some(mesh.vertex_count())).unwrap();
        let oracle = dense_oracle(&ops.stiffness, &ops.mass, 10, 5000).unwrap();
        for i in 0..10 {
            assert!((sol.eigenvalues[i] - oracle.eigenvalues[i]).abs() < 1e-9 * (1.0 + oracle.eigenvalues[i]));
        }
    }
}
