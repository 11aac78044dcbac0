#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = deppoe::trace::parse_edge_counts(data);
});
