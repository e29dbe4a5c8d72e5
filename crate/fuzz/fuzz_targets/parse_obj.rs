#![no_main]

use hsim::mesh::parse_obj;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = parse_obj(text) {
        let n = mesh.vertex_count();
        assert!(mesh.triangles().iter().flatten().all(|&i| i < n));
    }
});
