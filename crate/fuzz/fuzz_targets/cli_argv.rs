#![no_main]

use gcconvex::cli::{parse_args, split_command};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let argv = std::iter::once("gcconvex").chain(text.split('\0'));
    if let Ok(cli) = parse_args(argv) {
        let _ = split_command(&cli.command);
    }
});
