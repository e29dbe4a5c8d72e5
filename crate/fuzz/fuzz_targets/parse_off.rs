#![no_main]

use hsim::mesh::{parse_off, write_off, EdgeGraph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(mesh) = parse_off(text) else { return };
    // Anything accepted is a valid mesh and survives a round trip.
    let mut out = Vec::new();
    write_off(&mesh, &mut out).unwrap();
    let back = parse_off(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(back.triangles(), mesh.triangles());
    assert!(mesh.surface_area().is_finite());
    let _ = EdgeGraph::from_mesh(&mesh);
});
