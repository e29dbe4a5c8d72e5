//! Solver tolerance against discretization: how far a loose-tolerance
//! spectrum sits from its tight reference, compared with how far the
//! references of two meshes of the same surface sit from each other.

use std::io::Write;

use hsim::applications::{eigen_difference_metrics, ApplicationError, VectorComparison};
use hsim::mesh::TriangleMesh;
use hsim::solver::{hsim_solve, EigenSolution, SolverConfig, SolverError};
use thiserror::Error;

use crate::run::Problem;

/// Tolerance used for the reference solves.
pub const REFERENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("correspondence has {found} entries, first mesh has {expected} vertices")]
    CorrespondenceSize { expected: usize, found: usize },
    #[error("no tolerances given")]
    NoTolerances,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Application(#[from] ApplicationError),
    #[error(transparent)]
    Operator(#[from] hsim::operators::OperatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceCurve {
    pub tolerance: f64,
    /// Relative eigenvalue difference to the reference on the same mesh.
    pub value_diffs: Vec<f64>,
    pub vector_discrepancies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceStudy {
    pub count: usize,
    /// Relative difference between the two meshes' reference spectra.
    pub inter_mesh: Vec<f64>,
    /// Eigenvector discrepancy between the references, when a
    /// correspondence (or identical vertex sets) allows it.
    pub inter_mesh_vectors: Option<Vec<f64>>,
    pub curves: Vec<ToleranceCurve>,
}

impl ToleranceStudy {
    /// Fraction of indices `i ≥ 1` (skipping the zero eigenvalue) where
    /// `curve` lies strictly below the inter-mesh curve.
    pub fn fraction_below(&self, curve: usize) -> f64 {
        let c = &self.curves[curve].value_diffs;
        let idx: Vec<usize> = (1..self.count).collect();
        if idx.is_empty() {
            return 1.0;
        }
        idx.iter().filter(|&&i| c[i] < self.inter_mesh[i]).count() as f64 / idx.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string(), "inter_mesh_value_diff".to_string()];
        if self.inter_mesh_vectors.is_some() {
            header.push("inter_mesh_vector_discrepancy".into());
        }
        for c in &self.curves {
            header.push(format!("eps_{:e}_value_diff", c.tolerance));
            header.push(format!("eps_{:e}_vector_discrepancy", c.tolerance));
        }
        w.write_record(&header)?;
        for i in 0..self.count {
            let mut row = vec![i.to_string(), format!("{:e}", self.inter_mesh[i])];
            if let Some(v) = &self.inter_mesh_vectors {
                row.push(format!("{:e}", v[i]));
            }
            for c in &self.curves {
                row.push(format!("{:e}", c.value_diffs[i]));
                row.push(format!("{:e}", c.vector_discrepancies[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn solve(mesh: &TriangleMesh, problem: &Problem, base: &SolverConfig, tolerance: f64) -> Result<EigenSolution, SolverError> {
    let config = SolverConfig { tolerance, ..base.clone() };
    Ok(hsim_solve(mesh, &problem.operator, &problem.mass, &config)?.0)
}

/// Solves both meshes at [`REFERENCE_TOLERANCE`] and the first mesh at
/// every tolerance in `tolerances`. `correspondence[v]` maps vertices of
/// `mesh_a` to `mesh_b`; it is only needed for eigenvector comparisons
/// across different vertex sets.
pub fn run_tolerance_study(
    mesh_a: &TriangleMesh,
    mesh_b: &TriangleMesh,
    correspondence: Option<&[usize]>,
    tolerances: &[f64],
    config: &SolverConfig,
) -> Result<ToleranceStudy, StudyError> {
    if tolerances.is_empty() {
        return Err(StudyError::NoTolerances);
    }
    if let Some(map) = correspondence {
        if map.len() != mesh_a.vertex_count() {
            return Err(StudyError::CorrespondenceSize { expected: mesh_a.vertex_count(), found: map.len() });
        }
    }
    let count = config.num_eigs;
    let problem_a = Problem::assemble(mesh_a, 0.0)?;
    let problem_b = Problem::assemble(mesh_b, 0.0)?;
    let ref_a = solve(mesh_a, &problem_a, config, REFERENCE_TOLERANCE)?;
    let ref_b = solve(mesh_b, &problem_b, config, REFERENCE_TOLERANCE)?;

    let cross_vectors = correspondence.is_some() || mesh_a.vertex_count() == mesh_b.vertex_count();
    let cross = eigen_difference_metrics(
        &ref_a,
        &ref_b,
        count,
        cross_vectors.then_some(VectorComparison { mass: &problem_a.mass, correspondence }),
    )?;

    let mut curves = Vec::with_capacity(tolerances.len());
    for &tolerance in tolerances {
        let sol = solve(mesh_a, &problem_a, config, tolerance)?;
        let d = eigen_difference_metrics(&sol, &ref_a, count, Some(VectorComparison { mass: &problem_a.mass, correspondence: None }))?;
        curves.push(ToleranceCurve {
            tolerance,
            value_diffs: d.value_diffs,
            vector_discrepancies: d.vector_discrepancies.unwrap_or_default(),
        });
    }
    Ok(ToleranceStudy { count, inter_mesh: cross.value_diffs, inter_mesh_vectors: cross.vector_discrepancies, curves })
}
