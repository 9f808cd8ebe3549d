#![no_main]

use libfuzzer_sys::fuzz_target;
use mec_offload::harness::config::ConfigFile;

fuzz_target!(|data: &str| {
    // Accepted configs must also survive conversion to run inputs.
    if let Ok(cfg) = ConfigFile::parse(data) {
        let _ = cfg.scenario();
        let _ = cfg.solver();
        let _ = cfg.schemes();
        let _ = cfg.axis_values();
    }
});
