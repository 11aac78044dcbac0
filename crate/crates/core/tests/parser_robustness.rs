//! Replays the fuzz corpus seeds through the parsers and mutates them to
//! check that malformed input is an error, never a panic.

use std::fs;
use std::path::PathBuf;

use deppoe::io::{parse_config, parse_design, parse_edge_list, parse_expression};
use deppoe::simulate::TruthFile;
use deppoe::trace::{self, TraceMeta, TraceStore};
use proptest::prelude::*;

/// The store a trace directory of the corpus run has after its metadata
/// and theta file are read.
fn store() -> TraceStore {
    let mut store = TraceStore::new(TraceMeta {
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
    });
    store.iterations = vec![6, 8];
    store
}

/// Runs the named target; returns whether the input parsed.
fn run(target: &str, text: &str) -> bool {
    let genes = ["gene1".to_string(), "gene2".to_string(), "gene3".to_string()];
    match target {
        "parse_expression" => parse_expression(text, "t").is_ok(),
        "parse_design" => parse_design(text, "t").is_ok(),
        "parse_config" => parse_config(text, "t").is_ok(),
        "parse_edge_list" => parse_edge_list(text, "t", &genes).is_ok(),
        "parse_truth" => TruthFile::parse(text, "t").map(|t| t.true_edges()).is_ok(),
        "trace_parse_meta" => trace::parse_meta(text).is_ok(),
        "trace_parse_stats" => trace::parse_stats(text).is_ok(),
        "trace_parse_edge_counts" => trace::parse_edge_counts(text).is_ok(),
        "trace_parse_theta" => trace::parse_theta(text, &mut store()).is_ok(),
        "trace_parse_edges" => trace::parse_edges(text, &mut store()).is_ok(),
        "trace_parse_scores" => trace::parse_scores(text, &mut store()).is_ok(),
        other => panic!("no parser for corpus directory {other}"),
    }
}

fn seeds() -> Vec<(String, String, String)> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut out = Vec::new();
    for dir in fs::read_dir(&root).unwrap() {
        let dir = dir.unwrap().path();
        let target = dir.file_name().unwrap().to_string_lossy().to_string();
        for f in fs::read_dir(&dir).unwrap() {
            let f = f.unwrap().path();
            let name = f.file_name().unwrap().to_string_lossy().to_string();
            if name.starts_with("seed") {
                out.push((target.clone(), name, fs::read_to_string(&f).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn corpus_seeds_parse_as_expected() {
    let all = seeds();
    assert!(all.len() >= 11, "only {} seeds", all.len());
    for (target, name, text) in &all {
        let invalid = name.contains("invalid");
        assert_eq!(run(target, text), !invalid, "{target}/{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_seeds_never_panic(
        pick in any::<prop::sample::Index>(),
        edits in prop::collection::vec((any::<prop::sample::Index>(), 0u8..4, any::<char>()), 1..6)
    ) {
        let all = seeds();
        let (target, _, text) = &all[pick.index(all.len())];
        let mut chars: Vec<char> = text.chars().collect();
        for (at, op, c) in edits {
            let k = at.index(chars.len() + 1);
            match op {
                0 => chars.insert(k, c),
                1 if k < chars.len() => { chars.remove(k); }
                2 if k < chars.len() => chars[k] = c,
                _ => chars.truncate(k),
            }
        }
        let mutated: String = chars.into_iter().collect();
        run(target, &mutated);
    }
}
