#![no_main]

use gcconvex::catalog::find;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(name) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entry) = find(name) {
        assert_eq!(entry.name, name);
    }
});
