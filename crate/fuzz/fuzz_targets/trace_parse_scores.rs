#![no_main]
use deppoe::trace::{TraceMeta, TraceStore};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // two genes, two samples, both orientations of one pair
    let meta = TraceMeta {
        gene_ids: vec!["gene1".into(), "gene2".into()],
        sample_ids: vec!["s1".into(), "s2".into()],
        covariates: 2,
        prior_edges: vec![(0, 1), (1, 0)],
        n_iter: 8,
        burn_in: 4,
        thin: 2,
        seed: 1,
        chain: 0,
        init: "full".into(),
    };
    let mut store = TraceStore::new(meta);
    let _ = deppoe::trace::parse_scores(data, &mut store);
});
