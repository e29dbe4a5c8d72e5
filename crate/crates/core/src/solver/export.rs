use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{median, EigenSolution, IterationLog, SolverError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// JSON header written next to an eigenvector CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionHeader {
    pub solver: String,
    pub vertex_count: usize,
    pub num_pairs: usize,
    pub converged: bool,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_summary: ResidualSummary,
    /// Iteration record such as `F|1|1`, for solvers that have one.
    pub iteration_record: Option<String>,
    pub log: Option<IterationLog>,
    pub config: serde_json::Value,
}

pub fn solution_header(solution: &EigenSolution, log: Option<&IterationLog>) -> SolutionHeader {
    let r = &solution.residuals;
    SolutionHeader {
        solver: solution.solver.name().to_string(),
        vertex_count: solution.vertex_count(),
        num_pairs: solution.len(),
        converged: solution.converged,
        eigenvalues: solution.eigenvalues.clone(),
        residuals: r.clone(),
        residual_summary: ResidualSummary {
            min: r.iter().copied().fold(f64::INFINITY, f64::min),
            median: median(r),
            max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        iteration_record: log.map(|l| l.to_string()),
        log: log.cloned(),
        config: solution.config.clone(),
    }
}

/// Eigenvectors as CSV: `vertex,phi_0,phi_1,…`, one row per vertex.
pub fn write_solution_csv<W: Write>(solution: &EigenSolution, mut out: W) -> std::io::Result<()> {
    let k = solution.len();
    write!(out, "vertex")?;
    for j in 0..k {
        write!(out, ",phi_{j}")?;
    }
    writeln!(out)?;
    for i in 0..solution.vertex_count() {
        write!(out, "{i}")?;
        for j in 0..k {
            write!(out, ",{}", solution.eigenvectors[(i, j)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a block written by [`write_solution_csv`]. Rows must list the
/// vertices `0, 1, …` in order.
pub fn read_solution_csv(text: &str) -> Result<Mat<f64>, SolverError> {
    let bad = |m: String| SolverError::Format(m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"vertex") {
        return Err(bad("first header column must be `vertex`".into()));
    }
    let k = columns.len() - 1;
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (line_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != k + 1 {
            return Err(bad(format!("row {} has {} fields, expected {}", line_no + 2, fields.len(), k + 1)));
        }
        let vertex: usize = fields[0].parse().map_err(|_| bad(format!("row {}: bad vertex id {:?}", line_no + 2, fields[0])))?;
        if vertex != rows {
            return Err(bad(format!("row {}: expected vertex {rows}, found {vertex}", line_no + 2)));
        }
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| bad(format!("row {}: bad value {f:?}", line_no + 2)))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Mat::from_fn(rows, k, |i, j| data[i * k + j]))
}
