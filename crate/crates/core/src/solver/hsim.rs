use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::iteration::{compute_residuals, convergence_test, rayleigh_ritz_orthonormal, ritz_angle_estimates, solve_coarsest, subspace_iteration_step};
use super::{EigenSolution, IterationLog, SolverConfig, SolverError, SolverKind, StageTimings};
use crate::basis::{construct_prolongation, galerkin_project, DistanceEngine, ProlongationOperator};
use crate::factor::Cholesky;
use crate::geodesics::DistanceScheme;
use crate::mesh::{EdgeGraph, TriangleMesh};
use crate::operators::LaplaceOperators;
use crate::sampling::{build_hierarchy, build_pds_hierarchy, SamplingMethod, VertexHierarchy};
use crate::sparse::SymmetricMatrix;

/// Hierarchy and prolongations for one mesh. They depend only on the
/// geometry and the sampling/distance/basis settings, so one setup can be
/// reused for several operators and tolerances.
#[derive(Debug, Clone)]
pub struct HsimSetup {
    pub hierarchy: VertexHierarchy,
    /// `prolongations[l]` maps level `l` to level `l + 1`.
    pub prolongations: Vec<ProlongationOperator>,
    pub seconds: f64,
    pub distance: DistanceScheme,
}

impl HsimSetup {
    pub fn build(mesh: &TriangleMesh, config: &SolverConfig) -> Result<Self, SolverError> {
        let start = Instant::now();
        let graph = EdgeGraph::from_mesh(mesh)?;
        let laplace = match config.distance {
            DistanceScheme::Heat { .. } => Some(LaplaceOperators::assemble(mesh)),
            _ => None,
        };
        let mut setup = Self::build_with(mesh, &graph, laplace.as_ref(), config)?;
        setup.seconds = start.elapsed().as_secs_f64();
        Ok(setup)
    }

    /// `laplace` feeds the heat method (assembled on demand when `None`)
    /// and is ignored by the graph schemes.
    pub fn build_with(
        mesh: &TriangleMesh,
        graph: &EdgeGraph,
        laplace: Option<&LaplaceOperators>,
        config: &SolverConfig,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        let start = Instant::now();
        let hierarchy = match config.sampling {
            SamplingMethod::Fps => build_hierarchy(graph, config.num_eigs, &config.hierarchy, config.fps_seed)?,
            SamplingMethod::Pds => build_pds_hierarchy(mesh, graph, config.num_eigs, &config.hierarchy, config.seed)?,
        };
        let engine = DistanceEngine::new(config.distance, mesh, graph, laplace.map(|ops| (&ops.stiffness, &ops.mass)))?;
        let mut prolongations = Vec::with_capacity(hierarchy.level_count() - 1);
        for l in 0..hierarchy.level_count() - 1 {
            let u = construct_prolongation(&engine, &hierarchy.levels[l], hierarchy.radii[l], &hierarchy.levels[l + 1], &config.basis)?;
            if u.uncovered > 0 {
                log::info!("level {l}: {} fine vertices outside every support", u.uncovered);
            }
            prolongations.push(u);
        }
        Ok(Self { hierarchy, prolongations, seconds: start.elapsed().as_secs_f64(), distance: config.distance })
    }

    pub fn vertex_count(&self) -> usize {
        self.hierarchy.vertex_count()
    }
}

/// Builds the hierarchy and solves `S x = λ M x` for the lowest
/// `config.num_eigs` pairs. Non-convergence is reported through
/// `EigenSolution::converged` and the log, not as an error.
pub fn hsim_solve(
    mesh: &TriangleMesh,
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    config: &SolverConfig,
) -> Result<(EigenSolution, IterationLog), SolverError> {
    let setup = HsimSetup::build(mesh, config)?;
    hsim_solve_with_setup(&setup, stiffness, mass, config)
}

pub fn hsim_solve_with_setup(
    setup: &HsimSetup,
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    config: &SolverConfig,
) -> Result<(EigenSolution, IterationLog), SolverError> {
    config.validate()?;
    let start = Instant::now();
    let n = setup.vertex_count();
    if stiffness.dim() != n || mass.dim() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "hierarchy has {n} vertices, operators are {}x{} and {}x{}",
            stiffness.dim(),
            stiffness.dim(),
            mass.dim(),
            mass.dim()
        )));
    }
    let p = config.num_eigs;
    let k = config.block_size();
    let sizes = setup.hierarchy.level_sizes();
    if k > sizes[0] {
        return Err(SolverError::InvalidConfig(format!(
            "{k} Ritz vectors do not fit a coarsest level of {} samples",
            sizes[0]
        )));
    }
    if sizes[0] > config.dense_threshold {
        return Err(SolverError::CoarseTooLarge { dim: sizes[0], threshold: config.dense_threshold });
    }

    // Operators on every level, finest last.
    let galerkin_start = Instant::now();
    let levels = sizes.len();
    let mut ops: Vec<(SymmetricMatrix, SymmetricMatrix)> = Vec::with_capacity(levels);
    ops.push((stiffness.clone(), mass.clone()));
    for l in (0..levels - 1).rev() {
        let (s, m) = ops.last().expect("finest level present");
        let projected = galerkin_project(s, m, &setup.prolongations[l].matrix)?;
        ops.push(projected);
    }
    ops.reverse();
    let galerkin_seconds = galerkin_start.elapsed().as_secs_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log = IterationLog {
        level_sizes: sizes.clone(),
        converged: true,
        ..Default::default()
    };
    let mut level_seconds = Vec::with_capacity(levels);

    let t = Instant::now();
    let coarse = solve_coarsest(ops[0].0.to_dense().as_ref(), ops[0].1.to_dense().as_ref(), k)?;
    level_seconds.push(t.elapsed().as_secs_f64());
    let mut values = coarse.values;
    let mut vectors = coarse.vectors;

    for l in 1..levels {
        let t = Instant::now();
        let (s, m) = &ops[l];
        vectors = setup.prolongations[l - 1].matrix.mul_dense(vectors.as_ref());
        let sigma = config.shift.unwrap_or_else(|| 1e-8 * s.trace() / s.dim() as f64);
        let shifted = s.combine(1.0, m, sigma)?;
        let factor = Cholesky::new(&shifted).map_err(|source| SolverError::Factorization { level: l, source })?;
        let mut history = vec![values.clone()];

        let mut iterations = 0;
        let mut converged = false;
        while iterations < config.max_iters_per_level {
            iterations += 1;
            let orth = subspace_iteration_step(&factor, m, vectors.as_ref(), &mut rng);
            if orth.replaced > 0 {
                log.rank_repairs += orth.replaced;
                log.warnings.push(format!("level {l}, iteration {iterations}: {} block columns replaced", orth.replaced));
            }
            let ritz = rayleigh_ritz_orthonormal(s, orth.block.as_ref())?;
            values = ritz.values;
            vectors = ritz.vectors;
            let mut done = convergence_test(history.last().expect("history starts non-empty"), &values, p, config.tolerance);
            if done && l == levels - 1 {
                // Eigenvalue error is quadratic in vector error; also ask the
                // returned vectors for accuracy √ε.
                let worst = ritz_angle_estimates(s, m, &values, vectors.as_ref(), p).into_iter().fold(0.0, f64::max);
                done = worst <= config.tolerance.sqrt();
            }
            history.push(values.clone());
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            log.converged = false;
            let msg = format!("level {l}: not converged after {iterations} iterations");
            log::warn!("{msg}");
            log.warnings.push(msg);
        }
        log.level_iterations.push(iterations);
        log.ritz_history.push(history);
        level_seconds.push(t.elapsed().as_secs_f64());
    }

    let eigenvalues = values[..p].to_vec();
    let eigenvectors = vectors.subcols(0, p).to_owned();
    let residuals = compute_residuals(stiffness, mass, &eigenvalues, eigenvectors.as_ref());
    log.timings = StageTimings {
        hierarchy_seconds: setup.seconds + galerkin_seconds,
        level_seconds,
        total_seconds: setup.seconds + start.elapsed().as_secs_f64(),
    };
    let solution = EigenSolution {
        eigenvalues,
        eigenvectors,
        residuals,
        converged: log.converged,
        solver: SolverKind::Hsim,
        config: serde_json::to_value(config).expect("config serializes"),
    };
    Ok((solution, log))
}
