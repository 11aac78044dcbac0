#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = deppoe::simulate::TruthFile::parse(data, "fuzz") {
        let _ = t.true_edges();
    }
});
