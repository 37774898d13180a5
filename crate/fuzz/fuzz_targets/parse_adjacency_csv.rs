#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = das::io::parse_adjacency_csv(text);
        // The truth loader sniffs the format; feed it the same bytes.
        let _ = das::io::parse_truth(text, None);
    }
});
