//! Hierarchical subspace iteration.
//!
//! The lowest eigenpairs are first computed densely on the coarsest level of
//! a vertex hierarchy, then prolonged level by level and refined with a few
//! shifted inverse subspace iterations per level.

mod export;
mod hsim;
mod iteration;

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisError, BasisParams};
use crate::dense::DenseError;
use crate::factor::FactorError;
use crate::geodesics::{DistanceScheme, GeodesicError};
use crate::mesh::MeshError;
use crate::sampling::{HierarchyParams, SamplingError, SamplingMethod};
use crate::sparse::SparseError;

pub use export::{read_solution_csv, solution_header, write_solution_csv, SolutionHeader};
pub use hsim::{hsim_solve, hsim_solve_with_setup, HsimSetup};
pub use iteration::{compute_residuals, convergence_test, rayleigh_ritz, ritz_angle_estimates, solve_coarsest, subspace_iteration_step, RitzPairs};

/// Default largest coarse problem solved densely.
pub const DEFAULT_DENSE_THRESHOLD: usize = 5000;

/// Environment variable overriding [`DEFAULT_DENSE_THRESHOLD`].
pub const DENSE_THRESHOLD_ENV: &str = "HSIM_DENSE_THRESHOLD";

/// Dense threshold from the environment, falling back to the default.
pub fn dense_threshold_from_env() -> usize {
    std::env::var(DENSE_THRESHOLD_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_DENSE_THRESHOLD)
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("coarse problem of dimension {dim} exceeds the dense threshold {threshold}")]
    CoarseTooLarge { dim: usize, threshold: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("factorization of the shifted operator failed on level {level}: {source}")]
    Factorization { level: usize, source: FactorError },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed solution file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub num_eigs: usize,
    /// Relative eigenvalue change at which a level counts as converged.
    pub tolerance: f64,
    /// Ritz vectors carried per requested pair.
    pub buffer_factor: f64,
    pub max_iters_per_level: usize,
    pub distance: DistanceScheme,
    pub sampling: SamplingMethod,
    pub hierarchy: HierarchyParams,
    pub basis: BasisParams,
    /// Explicit shift; `None` uses `1e-8 · trace(S)/n` per level.
    pub shift: Option<f64>,
    pub fps_seed: usize,
    /// Seeds Poisson disk sampling and rank-repair vectors.
    pub seed: u64,
    pub dense_threshold: usize,
}

impl SolverConfig {
    pub fn new(num_eigs: usize) -> Self {
        Self {
            num_eigs,
            tolerance: 1e-2,
            buffer_factor: 1.3,
            max_iters_per_level: 20,
            distance: DistanceScheme::Dijkstra,
            sampling: SamplingMethod::Fps,
            hierarchy: HierarchyParams::default(),
            basis: BasisParams::default(),
            shift: None,
            fps_seed: 0,
            seed: 0,
            dense_threshold: dense_threshold_from_env(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_distance(mut self, distance: DistanceScheme) -> Self {
        self.distance = distance;
        self
    }

    /// Number of Ritz vectors carried, `ceil(buffer_factor · p)`.
    pub fn block_size(&self) -> usize {
        (self.buffer_factor * self.num_eigs as f64 - 1e-9).ceil() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if self.num_eigs == 0 {
            return bad("num_eigs must be positive".into());
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.buffer_factor >= 1.0) || !self.buffer_factor.is_finite() {
            return bad(format!("buffer factor must be at least 1, got {}", self.buffer_factor));
        }
        if self.max_iters_per_level == 0 {
            return bad("max_iters_per_level must be positive".into());
        }
        if let Some(s) = self.shift {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(format!("shift must be non-negative, got {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Hsim,
    Dense,
    Bpcg,
    Coarse,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hsim => "hsim",
            Self::Dense => "dense",
            Self::Bpcg => "bpcg",
            Self::Coarse => "coarse",
        }
    }
}

/// Ascending eigenvalues with M-orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub solver: SolverKind,
    /// Parameters the solver ran with.
    pub config: serde_json::Value,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn median_residual(&self) -> f64 {
        median(&self.residuals)
    }

    /// Keeps the first `count` pairs.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.len());
        Self {
            eigenvalues: self.eigenvalues[..count].to_vec(),
            eigenvectors: self.eigenvectors.subcols(0, count).to_owned(),
            residuals: self.residuals[..count.min(self.residuals.len())].to_vec(),
            converged: self.converged,
            solver: self.solver,
            config: self.config.clone(),
        }
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    /// Sampling, distances, prolongations and Galerkin products.
    pub hierarchy_seconds: f64,
    /// Dense coarse solve first, then each finer level.
    pub level_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl StageTimings {
    pub fn solve_seconds(&self) -> f64 {
        self.level_seconds.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// Subspace iterations on each level finer than the coarsest.
    pub level_iterations: Vec<usize>,
    pub level_sizes: Vec<usize>,
    /// Ritz values after the coarse solve and after every iteration, per
    /// finer level (the coarse values are entry 0 of level 0's history).
    pub ritz_history: Vec<Vec<Vec<f64>>>,
    pub timings: StageTimings,
    pub rank_repairs: usize,
    pub warnings: Vec<String>,
    pub converged: bool,
}

impl IterationLog {
    pub fn total_iterations(&self) -> usize {
        self.level_iterations.iter().sum()
    }
}

/// `F|a|b|…`: a full coarse solve followed by the per-level counts.
impl fmt::Display for IterationLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F")?;
        for n in &self.level_iterations {
            write!(f, "|{n}")?;
        }
        Ok(())
    }
}
