//! Table experiments: one CSV row per cell, in config order.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use hsim::geodesics::DistanceScheme;
use hsim::mesh::{EdgeGraph, TriangleMesh};
use hsim::sampling::{farthest_point_sampling, poisson_disk_sampling};
use hsim::solver::SolverConfig;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MeshSource, SolverChoice, TableKind};
use crate::run::{run_solver, ExtraOptions, Outcome, Problem};

/// Header note shared by every timing column.
pub const WALL_CLOCK: &str = "wall_clock_s_machine_dependent";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn timing(name: &str) -> String {
    format!("{name}_{WALL_CLOCK}")
}

pub fn header(kind: TableKind) -> Vec<String> {
    let owned: Vec<String> = match kind {
        TableKind::Schemes => vec![
            "model".into(),
            "vertices".into(),
            "eigs".into(),
            "distance".into(),
            "accuracy".into(),
            timing("hier"),
            "iterations".into(),
            timing("solve"),
            timing("total"),
            "median_residual".into(),
            "converged".into(),
        ],
        TableKind::Baselines => vec![
            "model".into(),
            "vertices".into(),
            "eigs".into(),
            "accuracy".into(),
            "solver".into(),
            "iterations".into(),
            timing("total"),
            "median_residual".into(),
            "max_residual".into(),
            "converged".into(),
        ],
        TableKind::Hamiltonian => vec![
            "model".into(),
            "vertices".into(),
            "eigs".into(),
            "hamiltonian_t".into(),
            "accuracy".into(),
            timing("hier"),
            timing("solve"),
            "iterations".into(),
            timing("total"),
            "converged".into(),
        ],
        TableKind::Sampling => vec![
            "model".into(),
            "vertices".into(),
            "eigs".into(),
            "samples".into(),
            timing("fps"),
            timing("pds"),
            "pds_samples".into(),
        ],
    };
    owned.into_iter().chain(["config_hash".to_string(), "error".to_string()]).collect()
}

/// Runs every cell of `config`. Cell failures are written into the row's
/// `error` column; the run always completes. Relative mesh paths are
/// resolved against `base`.
pub fn run_table(config: &ExperimentConfig, base: Option<&Path>) -> Report {
    let header = header(config.table);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut report = Report::new(&header_refs);
    let width = header.len();
    let hash = config.hash();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build().expect("thread pool");

    for source in &config.meshes {
        let mesh = match source.load(base) {
            Ok(m) => m,
            Err(e) => {
                let mut row = vec![String::new(); width];
                row[0] = source.label();
                row[width - 2] = hash.clone();
                row[width - 1] = e.to_string();
                report.rows.push(row);
                continue;
            }
        };
        let cells = cells(config, &mesh, source);
        let rows: Vec<Vec<Vec<String>>> = if config.threads > 1 {
            pool.install(|| cells.par_iter().map(|c| c.run(config, &mesh, source)).collect())
        } else {
            cells.iter().map(|c| c.run(config, &mesh, source)).collect()
        };
        for group in rows {
            for mut row in group {
                let error = if row.len() > width - 2 { row.pop().unwrap_or_default() } else { String::new() };
                row.resize(width - 2, String::new());
                row.push(hash.clone());
                row.push(error);
                report.rows.push(row);
            }
        }
    }
    report
}

#[derive(Debug, Clone)]
enum Cell {
    Scheme { eigs: usize, distance: DistanceScheme, tolerance: f64 },
    Baselines { eigs: usize, tolerance: f64 },
    Hamiltonian { eigs: usize, t: f64, tolerance: f64 },
    Sampling { eigs: usize, samples: usize },
}

fn cells(config: &ExperimentConfig, mesh: &TriangleMesh, _source: &MeshSource) -> Vec<Cell> {
    let mut out = Vec::new();
    for &eigs in &config.eigs {
        match config.table {
            TableKind::Schemes => {
                for &distance in &config.distances {
                    for &tolerance in &config.tolerances {
                        out.push(Cell::Scheme { eigs, distance, tolerance });
                    }
                }
            }
            TableKind::Baselines => {
                for &tolerance in &config.tolerances {
                    out.push(Cell::Baselines { eigs, tolerance });
                }
            }
            TableKind::Hamiltonian => {
                for &t in &config.hamiltonian_t {
                    for &tolerance in &config.tolerances {
                        out.push(Cell::Hamiltonian { eigs, t, tolerance });
                    }
                }
            }
            TableKind::Sampling => {
                if config.sample_counts.is_empty() {
                    let samples = (16 * eigs).min(mesh.vertex_count());
                    out.push(Cell::Sampling { eigs, samples });
                } else {
                    for &samples in &config.sample_counts {
                        out.push(Cell::Sampling { eigs, samples });
                    }
                }
            }
        }
    }
    out
}

fn fmt_secs(s: f64) -> String {
    format!("{s:.3}")
}

fn fmt_sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn solver_config(config: &ExperimentConfig, eigs: usize, tolerance: f64, distance: DistanceScheme) -> SolverConfig {
    let mut c = SolverConfig::new(eigs).with_tolerance(tolerance).with_distance(distance);
    c.seed = config.seed;
    c.fps_seed = config.fps_seed;
    c
}

fn max_residual(o: &Outcome) -> f64 {
    o.solution.residuals.iter().copied().fold(0.0, f64::max)
}

impl Cell {
    /// Rows without the trailing `config_hash` and `error` columns; a row
    /// that failed carries its error as an extra final column.
    fn run(&self, config: &ExperimentConfig, mesh: &TriangleMesh, source: &MeshSource) -> Vec<Vec<String>> {
        let model = source.label();
        let n = mesh.vertex_count().to_string();
        let width = header(config.table).len() - 2;
        let failed = |prefix: Vec<String>, err: String| {
            let mut row = prefix;
            row.resize(width, String::new());
            row.push(err);
            row
        };
        match *self {
            Cell::Scheme { eigs, distance, tolerance } => {
                let prefix = vec![model, n, eigs.to_string(), distance.to_string(), format!("{tolerance:e}")];
                let result = Problem::assemble(mesh, 0.0).map_err(|e| e.to_string()).and_then(|p| {
                    run_solver(SolverChoice::Hsim, mesh, &p, &solver_config(config, eigs, tolerance, distance), &ExtraOptions::default())
                        .map_err(|e| e.to_string())
                });
                match result {
                    Ok(o) => {
                        let mut row = prefix;
                        row.extend([
                            fmt_secs(o.setup_seconds),
                            o.iteration_record(),
                            fmt_secs(o.solve_seconds()),
                            fmt_secs(o.total_seconds),
                            fmt_sci(o.solution.median_residual()),
                            o.converged().to_string(),
                        ]);
                        vec![row]
                    }
                    Err(e) => vec![failed(prefix, e)],
                }
            }
            Cell::Baselines { eigs, tolerance } => {
                let problem = match Problem::assemble(mesh, 0.0) {
                    Ok(p) => p,
                    Err(e) => return vec![failed(vec![model, n, eigs.to_string(), format!("{tolerance:e}")], e.to_string())],
                };
                let sc = solver_config(config, eigs, tolerance, DistanceScheme::Dijkstra);
                let mut rows = Vec::new();
                let mut hsim: Option<Outcome> = None;
                let mut order = vec![SolverChoice::Hsim];
                order.extend(config.solvers.iter().copied().filter(|&s| s != SolverChoice::Hsim));
                let listed_hsim = config.solvers.contains(&SolverChoice::Hsim);
                for choice in order {
                    let prefix = vec![model.clone(), n.clone(), eigs.to_string(), format!("{tolerance:e}"), choice.name().to_string()];
                    let mut extra = ExtraOptions::default();
                    if choice == SolverChoice::Bpcg {
                        if let Some(h) = &hsim {
                            // Run block PCG to the accuracy HSIM actually reached.
                            extra.bpcg_tolerance = Some(max_residual(h));
                            if let Some(f) = config.bpcg_budget_factor {
                                extra.bpcg_time_budget = Some(Duration::from_secs_f64(f * h.total_seconds));
                            }
                        }
                    }
                    match run_solver(choice, mesh, &problem, &sc, &extra) {
                        Ok(o) => {
                            if choice != SolverChoice::Hsim || listed_hsim {
                                let mut row = prefix;
                                row.extend([
                                    o.iteration_record(),
                                    fmt_secs(o.total_seconds),
                                    fmt_sci(o.solution.median_residual()),
                                    fmt_sci(max_residual(&o)),
                                    o.converged().to_string(),
                                ]);
                                if o.bpcg.as_ref().is_some_and(|r| r.timed_out) {
                                    row.push("time budget exhausted".into());
                                }
                                rows.push(row);
                            }
                            if choice == SolverChoice::Hsim {
                                hsim = Some(o);
                            }
                        }
                        Err(e) => rows.push(failed(prefix, e.to_string())),
                    }
                }
                rows
            }
            Cell::Hamiltonian { eigs, t, tolerance } => {
                let prefix = vec![model, n, eigs.to_string(), format!("{t}"), format!("{tolerance:e}")];
                let result = Problem::assemble(mesh, t).map_err(|e| e.to_string()).and_then(|p| {
                    run_solver(SolverChoice::Hsim, mesh, &p, &solver_config(config, eigs, tolerance, DistanceScheme::Dijkstra), &ExtraOptions::default())
                        .map_err(|e| e.to_string())
                });
                match result {
                    Ok(o) => {
                        let mut row = prefix;
                        row.extend([
                            fmt_secs(o.setup_seconds),
                            fmt_secs(o.solve_seconds()),
                            o.iteration_record(),
                            fmt_secs(o.total_seconds),
                            o.converged().to_string(),
                        ]);
                        vec![row]
                    }
                    Err(e) => vec![failed(prefix, e)],
                }
            }
            Cell::Sampling { eigs, samples } => {
                let prefix = vec![model, n, eigs.to_string(), samples.to_string()];
                let graph = match EdgeGraph::from_mesh(mesh) {
                    Ok(g) => g,
                    Err(e) => return vec![failed(prefix, e.to_string())],
                };
                let t = Instant::now();
                let fps = farthest_point_sampling(&graph, samples, config.fps_seed);
                let fps_seconds = t.elapsed().as_secs_f64();
                let t = Instant::now();
                let pds = poisson_disk_sampling(mesh, samples, config.seed);
                let pds_seconds = t.elapsed().as_secs_f64();
                match (fps, pds) {
                    (Ok(_), Ok(p)) => {
                        let mut row = prefix;
                        row.extend([fmt_secs(fps_seconds), fmt_secs(pds_seconds), p.indices.len().to_string()]);
                        vec![row]
                    }
                    (Err(e), _) | (_, Err(e)) => vec![failed(prefix, e.to_string())],
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mesh_list_gives_header_only() {
        let c = ExperimentConfig::parse("table = schemes\n").unwrap();
        let r = run_table(&c, None);
        assert!(r.rows.is_empty());
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("model,vertices,eigs,distance,accuracy,hier_wall_clock"));
    }

    #[test]
    fn every_header_ends_with_provenance() {
        for k in [TableKind::Schemes, TableKind::Baselines, TableKind::Hamiltonian, TableKind::Sampling] {
            let h = header(k);
            assert_eq!(&h[h.len() - 2..], ["config_hash", "error"]);
            assert!(h.iter().filter(|c| c.contains("wall_clock")).count() >= 1);
        }
    }

    #[test]
    fn missing_mesh_is_recorded_in_row() {
        let c = ExperimentConfig::parse("table = schemes\nmeshes = /nonexistent/x.off\n").unwrap();
        let r = run_table(&c, None);
        assert_eq!(r.rows.len(), 1);
        let err = &r.rows[0][r.column("error").unwrap()];
        assert!(err.contains("/nonexistent/x.off"), "{err}");
        assert_eq!(r.rows[0].len(), r.header.len());
    }
}
