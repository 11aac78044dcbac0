use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use deppoe::run::{self, chain_dir, read_traces, RunConfig, Settings};
use deppoe::summarize::compute_summary;
use deppoe::trace::TraceStore;

fn simulate_into(dir: &Path, p: usize, n: usize, false_edges: usize, seed: u64) {
    let mut s = Settings::new();
    s.set("out_dir", dir.display().to_string(), true);
    s.set("p", p.to_string(), false);
    s.set("n", n.to_string(), false);
    s.set("false_edges", false_edges.to_string(), false);
    s.set("seed", seed.to_string(), false);
    let (cfg, out) = run::simulation_config(&s).unwrap();
    run::simulate(&cfg, &out).unwrap();
}

fn fit_settings(sim: &Path, out: &Path, n_iter: usize, burn_in: usize, chains: usize) -> Settings {
    let mut s = Settings::new();
    s.set("data", sim.join(run::EXPRESSION_FILE).display().to_string(), true);
    s.set("design", sim.join(run::DESIGN_FILE).display().to_string(), true);
    s.set("graph", sim.join(run::GRAPH_FILE).display().to_string(), true);
    s.set("out_dir", out.display().to_string(), true);
    s.set("n_iter", n_iter.to_string(), false);
    s.set("burn_in", burn_in.to_string(), false);
    s.set("thin", "5", false);
    s.set("seed", "7", false);
    s.set("chains", chains.to_string(), false);
    s.set("init", "full,empty", false);
    s
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_fit_summarize_evaluate_diagnose() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, fit) = (tmp.path().join("sim"), tmp.path().join("fit"));
    simulate_into(&sim, 6, 10, 4, 3);
    for f in [run::EXPRESSION_FILE, run::DESIGN_FILE, run::GRAPH_FILE, run::TRUTH_FILE] {
        assert!(sim.join(f).is_file(), "{f}");
    }

    let config = RunConfig::from_settings(&fit_settings(&sim, &fit, 1_000, 500, 2)).unwrap();
    let manifest = run::fit(&config).unwrap();
    assert_eq!(manifest.chains.len(), 2);
    assert_eq!(manifest.chains[1].seed, 8);
    assert_eq!(manifest.chains[1].init, "empty");
    assert!(manifest.chains.iter().all(|c| c.retained_draws == 100));
    assert!(fit.join(run::MANIFEST_FILE).is_file() && fit.join(run::RUN_CONFIG_FILE).is_file());

    let (summary, selected) = run::summarize(&fit, &fit, 0.5).unwrap();
    assert_eq!(summary.draws, 200);
    assert!(selected.edges.iter().all(|e| e.v > 0.5));
    for f in [
        run::PSTAR_FILE,
        run::EDGE_SUMMARY_FILE,
        run::SELECTED_FILE,
        run::DEGREE_FILE,
    ] {
        assert!(fit.join(f).is_file(), "{f}");
    }

    let eval = run::evaluate(&fit, &sim.join(run::TRUTH_FILE), &fit, 0.5).unwrap();
    assert!((0.0..=1.0).contains(&eval.fdr) && (0.0..=1.0).contains(&eval.power));
    assert_eq!(eval.selected, selected.edges.len());
    assert_eq!(eval.true_positives + eval.false_positives, eval.selected);

    let report = run::diagnose(&fit, &fit).unwrap();
    assert_eq!(report.chains.len(), 2);
    assert_eq!(report.trace.len(), 2 * 1_000);
    assert!(report.overlap.is_finite());
    assert!(fs::read_to_string(fit.join(run::DIAGNOSTICS_FILE))
        .unwrap()
        .contains("overlap"));
}

#[test]
fn recorded_configuration_reproduces_the_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, first, second) = (tmp.path().join("sim"), tmp.path().join("a"), tmp.path().join("b"));
    simulate_into(&sim, 5, 8, 3, 4);
    run::fit(&RunConfig::from_settings(&fit_settings(&sim, &first, 600, 300, 2)).unwrap()).unwrap();

    let mut s = Settings::from_file(&first.join(run::RUN_CONFIG_FILE)).unwrap();
    s.set("out_dir", second.display().to_string(), true);
    run::fit(&RunConfig::from_settings(&s).unwrap()).unwrap();
    for c in 0..2 {
        assert_eq!(files(&chain_dir(&first, c)), files(&chain_dir(&second, c)), "chain {c}");
    }
}

#[test]
fn tiny_profile_finishes_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, fit) = (tmp.path().join("sim"), tmp.path().join("fit"));
    simulate_into(&sim, 3, 5, 1, 5);
    let started = Instant::now();
    let mut s = fit_settings(&sim, &fit, 2_000, 1_000, 1);
    s.set("init", "full", false);
    run::fit(&RunConfig::from_settings(&s).unwrap()).unwrap();
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 10.0, "{secs:.1}s");
}

#[test]
fn traces_round_trip_and_pool_by_concatenation() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, fit, copy) = (tmp.path().join("sim"), tmp.path().join("fit"), tmp.path().join("copy"));
    simulate_into(&sim, 5, 8, 3, 6);
    run::fit(&RunConfig::from_settings(&fit_settings(&sim, &fit, 600, 200, 2)).unwrap()).unwrap();

    let traces = read_traces(&fit).unwrap();
    let (store, stats) = &traces[0];
    store.write(&copy, stats).unwrap();
    let (again, stats_again) = TraceStore::read(&copy).unwrap();
    assert_eq!(&again, store);
    assert_eq!(&stats_again, stats);

    let stores: Vec<TraceStore> = traces.iter().map(|(t, _)| t.clone()).collect();
    let pooled = TraceStore::pool(&stores).unwrap();
    let summary = compute_summary(&pooled).unwrap();
    let parts: Vec<_> = stores.iter().map(|t| compute_summary(t).unwrap()).collect();
    assert_eq!(summary.draws, parts.iter().map(|s| s.draws).sum::<usize>());
    for k in 0..summary.v.len() {
        let recount: f64 = parts.iter().map(|s| s.v[k] * s.draws as f64).sum::<f64>() / summary.draws as f64;
        assert!((summary.v[k] - recount).abs() < 1e-12);
    }
    let mut counts = stores[0].retained_edge_counts();
    counts.extend(stores[1].retained_edge_counts());
    assert_eq!(pooled.retained_edge_counts(), counts);
}

#[test]
fn summary_invariants_hold() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, fit) = (tmp.path().join("sim"), tmp.path().join("fit"));
    simulate_into(&sim, 6, 8, 4, 7);
    run::fit(&RunConfig::from_settings(&fit_settings(&sim, &fit, 800, 400, 2)).unwrap()).unwrap();
    let (pooled, summary) = run::pooled_summary(&fit).unwrap();
    let g0 = pooled.meta.prior_graph().unwrap();

    for (a, b) in summary.pi_plus.as_slice().iter().zip(summary.pi_minus.as_slice()) {
        assert!(*a >= 0.0 && *b >= 0.0 && a + b <= 1.0 + 1e-12);
    }
    let sizes: Vec<usize> = [0.1, 0.5, 0.9]
        .iter()
        .map(|&t| deppoe::summarize::select_median_model(&summary, &g0, t).edges.len())
        .collect();
    assert!(sizes[0] >= sizes[1] && sizes[1] >= sizes[2], "{sizes:?}");
    for (k, &v) in summary.v.iter().enumerate() {
        if v == 0.0 {
            assert_eq!(summary.beta_mean[k], 0.0);
            assert_eq!(summary.beta_mean_given_inclusion[k], None);
        }
    }
    for (i, dist) in summary.degree_posterior.iter().enumerate() {
        let mut neighbours: Vec<usize> = g0
            .edges()
            .filter_map(|e| match (e.src.0 == i, e.dst.0 == i) {
                (true, _) => Some(e.dst.0),
                (_, true) => Some(e.src.0),
                _ => None,
            })
            .collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        assert_eq!(dist.len(), neighbours.len() + 1, "gene {i}");
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
