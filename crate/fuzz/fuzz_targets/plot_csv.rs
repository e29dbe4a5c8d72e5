#![no_main]

use hsim_bench::plot::{csv_to_svg, PlotOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for log_y in [false, true] {
        if let Ok(svg) = csv_to_svg(text, "fuzz", &PlotOptions { log_y, ..Default::default() }) {
            assert!(svg.ends_with("</svg>\n"));
        }
    }
});
