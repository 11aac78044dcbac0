#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let genes = ["gene1".to_string(), "gene2".to_string(), "gene3".to_string()];
    let _ = deppoe::io::parse_edge_list(data, "fuzz", &genes);
});
