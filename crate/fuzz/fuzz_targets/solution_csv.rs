#![no_main]

use hsim::solver::read_solution_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(block) = read_solution_csv(text) {
        assert!(block.nrows() > 0 || block.ncols() == 0);
    }
});
