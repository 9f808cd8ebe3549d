#![no_main]

use libfuzzer_sys::fuzz_target;
use mec_offload::harness::config::parse_sweep;

fuzz_target!(|data: &str| {
    let _ = parse_sweep(data);
});
