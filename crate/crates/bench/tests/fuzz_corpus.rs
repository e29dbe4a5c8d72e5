//! Replays the checked-in fuzz seeds through the parsers the fuzz targets
//! exercise, so the seeds stay meaningful and crash-free.

use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn mesh_seeds() {
    let mut accepted = 0;
    for (_, text) in seeds("parse_off") {
        accepted += usize::from(hsim::mesh::parse_off(&text).is_ok());
    }
    for (_, text) in seeds("parse_obj") {
        accepted += usize::from(hsim::mesh::parse_obj(&text).is_ok());
    }
    assert!(accepted >= 3);
}

#[test]
fn matrix_market_seeds() {
    for (path, text) in seeds("matrix_market") {
        hsim::matrix_market::parse_matrix_market(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn config_seeds_reparse_to_the_same_hash() {
    for (path, text) in seeds("experiment_config") {
        let c = hsim_bench::config::ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = hsim_bench::config::ExperimentConfig::parse(c.canonical_text()).unwrap();
        assert_eq!(c.hash(), again.hash());
    }
}

#[test]
fn remaining_seeds() {
    for (_, text) in seeds("correspondence") {
        assert!(hsim::applications::parse_correspondence(&text, 3).is_ok());
    }
    for (_, text) in seeds("solution_csv") {
        assert!(hsim::solver::read_solution_csv(&text).is_ok());
    }
    for (_, text) in seeds("plot_csv") {
        assert!(hsim_bench::plot::csv_to_svg(&text, "", &Default::default()).is_ok());
    }
}
