use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deppoe::run::{self, RunConfig, Settings};
use deppoe::Error;

/// Pathway-structured probability-of-expression inference.
#[derive(Parser)]
#[command(name = "deppoe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a known graph.
    Simulate(SimulateArgs),
    /// Run MCMC chains and write their traces.
    Fit(FitArgs),
    /// Posterior tables and the median-model graph.
    Summarize(SummarizeArgs),
    /// FDR and power of the median model against a simulation truth.
    Evaluate(EvaluateArgs),
    /// Edge-count traces, cross-chain overlap and acceptance rates.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct Overrides {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of false prior edges.
    #[arg(long)]
    false_edges: Option<usize>,
    /// Expected number of true edges (sets the spike probability).
    #[arg(long)]
    target_edges: Option<usize>,
    #[arg(long)]
    pi0: Option<f64>,
    /// Samples in the first group.
    #[arg(long)]
    group_split: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Expression matrix (TSV).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Design matrix (TSV).
    #[arg(long)]
    design: Option<PathBuf>,
    /// Prior graph edge list.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Output directory for the traces.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Scale of the row-wise proposal covariance.
    #[arg(long)]
    mh_scale: Option<f64>,
    /// Reversible-jump attempts per sweep (default: number of prior edges).
    #[arg(long)]
    rj_moves: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated initial graphs per chain: full, empty or random.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    chains: Option<usize>,
    /// Chains run concurrently at most.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Trace directory written by `fit`.
    trace_dir: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Where to write the tables (default: the trace directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    trace_dir: PathBuf,
    /// Truth file written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    trace_dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn settings(o: &Overrides) -> Result<Settings, Error> {
    let mut s = match &o.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::new(),
    };
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        let key = deppoe::io::normalize_key(k);
        let is_path = matches!(key.as_str(), "data" | "design" | "graph" | "out_dir");
        s.set(&key, v.trim(), is_path);
    }
    Ok(s)
}

fn set<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        s.set(key, v.to_string(), false);
    }
}

fn set_path(s: &mut Settings, key: &str, v: &Option<PathBuf>) {
    if let Some(v) = v {
        s.set(key, v.display().to_string(), true);
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), Error> {
    let mut s = settings(&args.overrides)?;
    set_path(&mut s, "out_dir", &args.out);
    set(&mut s, "seed", &args.seed);
    set(&mut s, "p", &args.p);
    set(&mut s, "n", &args.n);
    set(&mut s, "false_edges", &args.false_edges);
    set(&mut s, "target_edges", &args.target_edges);
    set(&mut s, "pi0", &args.pi0);
    set(&mut s, "group_split", &args.group_split);
    let (cfg, out) = run::simulation_config(&s)?;
    let r = run::simulate(&cfg, &out)?;
    println!(
        "seed {}: {} genes, {} samples, {} true edges, {} false edges, {} prior edges -> {}",
        r.seed,
        r.genes,
        r.samples,
        r.true_edges,
        r.false_edges,
        r.true_edges + r.false_edges,
        out.display()
    );
    Ok(())
}

fn fit(args: &FitArgs) -> Result<(), Error> {
    let mut s = settings(&args.overrides)?;
    set_path(&mut s, "data", &args.data);
    set_path(&mut s, "design", &args.design);
    set_path(&mut s, "graph", &args.graph);
    set_path(&mut s, "out_dir", &args.out);
    set(&mut s, "n_iter", &args.n_iter);
    set(&mut s, "burn_in", &args.burn_in);
    set(&mut s, "thin", &args.thin);
    set(&mut s, "mh_scale", &args.mh_scale);
    set(&mut s, "rj_moves_per_sweep", &args.rj_moves);
    set(&mut s, "seed", &args.seed);
    set(&mut s, "init", &args.init);
    set(&mut s, "chains", &args.chains);
    set(&mut s, "parallel", &args.parallel);
    let config = RunConfig::from_settings(&s)?;
    let manifest = run::fit(&config)?;
    for c in &manifest.chains {
        println!(
            "chain {} (seed {}, init {}): {} draws in {:.1}s",
            c.chain, c.seed, c.init, c.retained_draws, c.wall_seconds
        );
    }
    println!("traces in {}", config.out_dir.display());
    Ok(())
}

fn out_or<'a>(out: &'a Option<PathBuf>, dir: &'a Path) -> &'a Path {
    out.as_deref().unwrap_or(dir)
}

fn summarize(args: &SummarizeArgs) -> Result<(), Error> {
    let out = out_or(&args.out, &args.trace_dir);
    let (summary, selected) = run::summarize(&args.trace_dir, out, args.threshold)?;
    println!(
        "{} draws; {} of {} prior edges selected at threshold {}",
        summary.draws,
        selected.edges.len(),
        summary.v.len(),
        args.threshold
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Error> {
    let out = out_or(&args.out, &args.trace_dir);
    let eval = run::evaluate(&args.trace_dir, &args.truth, out, args.threshold)?;
    print!("threshold = {}\n{}", args.threshold, eval.to_key_values());
    Ok(())
}

fn diagnose(args: &DiagnoseArgs) -> Result<(), Error> {
    let out = out_or(&args.out, &args.trace_dir);
    let report = run::diagnose(&args.trace_dir, out)?;
    for c in &report.chains {
        println!(
            "chain {} ({}): mean k_G {:.2}, sd {:.2}, range [{}, {}]",
            c.chain, c.init, c.mean, c.sd, c.min, c.max
        );
    }
    println!("overlap = {:.4}", report.overlap);
    print!("{}", report.stats);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Summarize(a) => summarize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
