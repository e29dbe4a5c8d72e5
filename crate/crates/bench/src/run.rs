//! Solver dispatch shared by the CLI and the table runners.

use std::time::{Duration, Instant};

use hsim::baselines::{block_pcg_eigensolver, coarse_one_shot, dense_oracle, BpcgOptions, BpcgReport};
use hsim::mesh::TriangleMesh;
use hsim::operators::{assemble_hamiltonian, CurvaturePotential, LaplaceOperators, OperatorError};
use hsim::solver::{hsim_solve, EigenSolution, IterationLog, SolverConfig, SolverError};
use hsim::sparse::SymmetricMatrix;

use crate::config::SolverChoice;

/// Stiffness-side operator (Laplace or Hamiltonian) with its mass matrix.
#[derive(Debug, Clone)]
pub struct Problem {
    pub operator: SymmetricMatrix,
    pub mass: SymmetricMatrix,
    pub hamiltonian_t: f64,
    pub assembly_seconds: f64,
}

impl Problem {
    /// `t = 0` gives the plain Laplace–Beltrami problem.
    pub fn assemble(mesh: &TriangleMesh, hamiltonian_t: f64) -> Result<Self, OperatorError> {
        let start = Instant::now();
        let ops = LaplaceOperators::assemble(mesh);
        let operator = if hamiltonian_t == 0.0 {
            ops.stiffness
        } else {
            let potential = CurvaturePotential::of_mesh(mesh, hamiltonian_t)?;
            assemble_hamiltonian(&ops.stiffness, &ops.mass, &potential.values)?
        };
        Ok(Self { operator, mass: ops.mass, hamiltonian_t, assembly_seconds: start.elapsed().as_secs_f64() })
    }
}

/// One solver run with its wall-clock breakdown.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub solution: EigenSolution,
    pub log: Option<IterationLog>,
    pub bpcg: Option<BpcgReport>,
    /// Hierarchy and prolongation construction (HSIM and coarse only).
    pub setup_seconds: f64,
    pub total_seconds: f64,
}

impl Outcome {
    pub fn solve_seconds(&self) -> f64 {
        (self.total_seconds - self.setup_seconds).max(0.0)
    }

    /// `F|a|b` for HSIM, the iteration count for block PCG, `F` otherwise.
    pub fn iteration_record(&self) -> String {
        match (&self.log, &self.bpcg) {
            (Some(log), _) => log.to_string(),
            (None, Some(r)) => r.iterations.to_string(),
            (None, None) => "F".to_string(),
        }
    }

    pub fn converged(&self) -> bool {
        self.solution.converged
    }
}

/// Options that only some solvers read.
#[derive(Debug, Clone, Default)]
pub struct ExtraOptions {
    /// Residual target for block PCG; defaults to its own default.
    pub bpcg_tolerance: Option<f64>,
    pub bpcg_time_budget: Option<Duration>,
    pub bpcg_max_iterations: Option<usize>,
}

pub fn run_solver(
    choice: SolverChoice,
    mesh: &TriangleMesh,
    problem: &Problem,
    config: &SolverConfig,
    extra: &ExtraOptions,
) -> Result<Outcome, SolverError> {
    let start = Instant::now();
    match choice {
        SolverChoice::Hsim => {
            let (solution, log) = hsim_solve(mesh, &problem.operator, &problem.mass, config)?;
            Ok(Outcome {
                setup_seconds: log.timings.hierarchy_seconds,
                total_seconds: start.elapsed().as_secs_f64(),
                solution,
                log: Some(log),
                bpcg: None,
            })
        }
        SolverChoice::Dense => {
            let solution = dense_oracle(&problem.operator, &problem.mass, config.num_eigs, config.dense_threshold)?;
            Ok(Outcome { solution, log: None, bpcg: None, setup_seconds: 0.0, total_seconds: start.elapsed().as_secs_f64() })
        }
        SolverChoice::Bpcg => {
            let defaults = BpcgOptions::default();
            let options = BpcgOptions {
                tolerance: extra.bpcg_tolerance.unwrap_or(defaults.tolerance),
                max_iterations: extra.bpcg_max_iterations.unwrap_or(defaults.max_iterations),
                time_budget: extra.bpcg_time_budget,
                seed: config.seed,
            };
            let (solution, report) = block_pcg_eigensolver(&problem.operator, &problem.mass, config.num_eigs, None, &options)?;
            Ok(Outcome { solution, log: None, bpcg: Some(report), setup_seconds: 0.0, total_seconds: start.elapsed().as_secs_f64() })
        }
        SolverChoice::Coarse => {
            let solution = coarse_one_shot(mesh, &problem.operator, &problem.mass, config, None)?;
            Ok(Outcome { solution, log: None, bpcg: None, setup_seconds: 0.0, total_seconds: start.elapsed().as_secs_f64() })
        }
    }
}
