#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = deppoe::io::parse_config(data, "fuzz");
});
