use deppoe::graph::DirectedEdge;
use deppoe::io::{
    format_config, format_design, format_edge_list, format_expression, parse_config, parse_design, parse_edge_list,
    parse_expression,
};
use deppoe::model::{ExpressionDataset, RowMatrix};
use indexmap::IndexMap;
use proptest::prelude::*;

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn dataset(p: usize, n: usize, y: Vec<f64>, group: Vec<bool>) -> ExpressionDataset {
    let x = RowMatrix::from_fn(n, 2, |j, c| if c == 0 || group[j] { 1.0 } else { 0.0 });
    ExpressionDataset::new(RowMatrix::from_vec(p, n, y), x, ids("gene", p), ids("s", n)).unwrap()
}

fn shaped() -> impl Strategy<Value = ExpressionDataset> {
    (1usize..6, 1usize..7).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(-1e6f64..1e6, p * n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(y, g)| dataset(p, n, y, g))
    })
}

proptest! {
    #[test]
    fn expression_survives_format_and_parse(data in shaped()) {
        let table = parse_expression(&format_expression(&data), "expr").unwrap();
        prop_assert_eq!(&table.gene_ids, data.gene_ids());
        prop_assert_eq!(&table.sample_ids, data.sample_ids());
        prop_assert_eq!(&table.values, data.y());
    }

    #[test]
    fn design_survives_format_and_parse(data in shaped()) {
        let names = vec!["intercept".to_string(), "group".to_string()];
        let table = parse_design(&format_design(&data, &names), "design").unwrap();
        prop_assert_eq!(&table.covariate_names, &names);
        prop_assert_eq!(&table.sample_ids, data.sample_ids());
        prop_assert_eq!(&table.values, data.design());
    }

    #[test]
    fn edge_lists_keep_their_order(
        p in 2usize..8,
        picks in prop::collection::vec((0usize..8, 0usize..8), 0..30)
    ) {
        let mut edges: Vec<DirectedEdge> = Vec::new();
        for (s, d) in picks {
            let e = DirectedEdge::new(s % p, d % p);
            if s % p != d % p && !edges.contains(&e) {
                edges.push(e);
            }
        }
        let genes = ids("gene", p);
        let g0 = parse_edge_list(&format_edge_list(&edges, &genes), "edges", &genes).unwrap();
        prop_assert_eq!(g0.edges().copied().collect::<Vec<_>>(), edges);
    }

    #[test]
    fn config_entries_survive_format_and_parse(
        entries in prop::collection::vec(("[a-z][a-z0-9_]{0,10}", "[A-Za-z0-9_./,-]{0,12}"), 0..12)
    ) {
        let mut map = IndexMap::new();
        for (k, v) in entries {
            map.entry(k).or_insert(v);
        }
        prop_assert_eq!(parse_config(&format_config(&map), "cfg").unwrap(), map);
    }
}
