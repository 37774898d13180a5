#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Must never panic; errors are fine. Exercise both the inferred-d
        // and fixed-d paths.
        let _ = das::io::parse_edge_list(text, None);
        let _ = das::io::parse_edge_list(text, Some(8));
    }
});
