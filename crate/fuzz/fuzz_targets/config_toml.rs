#![no_main]

use gcconvex::cli::config::{CheckSet, FileConfig, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = FileConfig::from_toml_str(text) {
        let _ = RunConfig::resolve(CheckSet::All, file);
    }
});
