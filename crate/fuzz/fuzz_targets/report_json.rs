#![no_main]

use gcconvex::cli::report::Report;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = Report::from_json_str(text) {
        let again = Report::from_json_str(&report.to_json()).expect("serialized report parses");
        assert_eq!(again.to_json(), report.to_json());
    }
});
