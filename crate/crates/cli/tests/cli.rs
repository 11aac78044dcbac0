use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deppoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deppoe")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = deppoe(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path) {
    ok(&[
        "simulate",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "3",
        "--p",
        "5",
        "--n",
        "8",
        "--false-edges",
        "3",
    ]);
}

fn fit_with(sim: &Path, out: &Path, n_iter: &str, burn_in: &str, extra: &[&str]) -> Output {
    let s = |f: &str| sim.join(f).display().to_string();
    let (data, design, graph) = (s("expression.tsv"), s("design.tsv"), s("prior_graph.edges"));
    let mut args = vec![
        "fit",
        "--data",
        &data,
        "--design",
        &design,
        "--graph",
        &graph,
        "--out",
        out.to_str().unwrap(),
        "--n-iter",
        n_iter,
        "--burn-in",
        burn_in,
        "--thin",
        "3",
    ];
    args.extend_from_slice(extra);
    deppoe(&args)
}

fn fit(sim: &Path, out: &Path, extra: &[&str]) -> Output {
    fit_with(sim, out, "600", "300", extra)
}

#[test]
fn every_subcommand_runs_in_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, out) = (tmp.path().join("sim"), tmp.path().join("fit"));
    simulate(&sim);
    let f = fit(&sim, &out, &["--chains", "2", "--init", "full,empty"]);
    assert!(f.status.success(), "{}", String::from_utf8_lossy(&f.stderr));
    assert!(String::from_utf8_lossy(&f.stdout).contains("chain 1 (seed 2, init empty)"));

    let trace = out.to_str().unwrap();
    assert!(ok(&["summarize", trace]).contains("prior edges selected"));
    assert!(out.join("selected_graph.edges").is_file());
    let truth = sim.join("truth.json");
    let eval = ok(&["evaluate", trace, "--truth", truth.to_str().unwrap()]);
    assert!(eval.contains("fdr = ") && eval.contains("power = "));
    assert!(ok(&["diagnose", trace]).contains("overlap = "));
}

#[test]
fn invalid_input_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&sim);
    let bad = fit_with(&sim, &tmp.path().join("a"), "600", "600", &[]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("burn_in"));

    let missing = deppoe(&["summarize", tmp.path().join("nothing").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = fit(&sim, &tmp.path().join("b"), &["--set", "no_such_key=1"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn a_fixed_seed_gives_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&sim);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(fit(&sim, dir, &["--seed", "7"]).status.success());
    }
    for name in [
        "theta.csv",
        "edges.csv",
        "scores_summary.csv",
        "edge_count.csv",
        "stats.json",
        "trace_meta.json",
    ] {
        let (x, y) = (a.join("chain_0").join(name), b.join("chain_0").join(name));
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{name}");
    }
}

#[test]
fn a_config_file_anchors_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&tmp.path().join("sim"));
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "data = sim/expression.tsv\ndesign = sim/design.tsv\ngraph = sim/prior_graph.edges\nout_dir = out\nn_iter = 400\nburn_in = 200\n",
    )
    .unwrap();
    ok(&["fit", "--config", cfg.to_str().unwrap()]);
    assert!(tmp.path().join("out/chain_0/theta.csv").is_file());
}

#[test]
fn a_fixed_seed_gives_identical_simulations() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&[
            "simulate",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "7",
            "--p",
            "20",
            "--false-edges",
            "35",
        ]);
    }
    for name in ["expression.tsv", "design.tsv", "prior_graph.edges", "truth.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn default_simulation_has_the_reference_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["simulate", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.contains("50 genes, 30 samples"), "{out}");
    let lines = fs::read_to_string(tmp.path().join("prior_graph.edges"))
        .unwrap()
        .lines()
        .count();
    let true_edges: usize = out
        .split(" true edges")
        .next()
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(lines, true_edges + 87);
}
