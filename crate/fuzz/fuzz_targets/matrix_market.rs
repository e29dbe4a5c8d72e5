#![no_main]

use hsim::matrix_market::{parse_matrix_market, parse_symmetric, write_symmetric};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_matrix_market(text);
    if let Ok(m) = parse_symmetric(text) {
        let mut out = Vec::new();
        write_symmetric(&m, &mut out).unwrap();
        let back = parse_symmetric(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back.dim(), m.dim());
        assert_eq!(back.nnz(), m.nnz());
    }
});
