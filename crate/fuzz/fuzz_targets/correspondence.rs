#![no_main]

use hsim::applications::parse_correspondence;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (u16, &[u8])| {
    let (count, data) = input;
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = parse_correspondence(text, count as usize) {
        assert!(map.iter().all(|&v| v < count as usize));
    }
});
