#![no_main]

use libfuzzer_sys::fuzz_target;
use mec_offload::harness::csv::{parse_rows, rows_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_rows(text) {
        // Whatever parses must serialize and parse back.
        let again = rows_to_string(&rows);
        assert!(parse_rows(&again).is_ok());
    }
});
