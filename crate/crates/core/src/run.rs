//! Run orchestration behind the command-line tool: configuration
//! resolution, multi-chain fitting, and the post-processing commands.
//!
//! Configuration is a flat `key = value` map. Values given on the command
//! line replace those read from a configuration file; keys absent from
//! both take their defaults. Relative paths in a configuration file are
//! resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph};
use crate::io::{
    assemble_dataset, format_config, format_design, format_edge_list, format_expression, parse_config, parse_design,
    parse_edge_list, parse_expression, read_text, write_atomic,
};
use crate::model::data::ExpressionDataset;
use crate::model::params::Hyperparameters;
use crate::sampler::chain::{run_chain, InitMode, SamplerConfig};
use crate::sampler::stats::MoveStats;
use crate::simulate::{gen_dataset, gen_prior_graph, SimulationConfig, TruthFile};
use crate::summarize::{
    compute_summary, diagnostics, evaluate_against_truth, format_degree_posterior, format_edges, format_pstar,
    select_median_model, Diagnostics, Evaluation, PosteriorSummary, SelectedGraph,
};
use crate::trace::{TraceStore, META_FILE};

pub const EXPRESSION_FILE: &str = "expression.tsv";
pub const DESIGN_FILE: &str = "design.tsv";
pub const GRAPH_FILE: &str = "prior_graph.edges";
pub const TRUTH_FILE: &str = "truth.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUN_CONFIG_FILE: &str = "run_config.txt";

/// A configuration map that remembers which keys were consumed, so that
/// misspelled keys are reported instead of silently ignored.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: IndexMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    /// Reads a configuration file; its directory anchors relative paths.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let entries = parse_config(&text, &path.display().to_string())?;
        Ok(Settings {
            entries,
            base_dir: path.parent().map(Path::to_path_buf),
        })
    }

    pub fn from_entries(entries: IndexMap<String, String>) -> Self {
        Settings {
            entries,
            base_dir: None,
        }
    }

    /// Sets or replaces a key (command-line override). Paths set this way
    /// are taken relative to the working directory.
    pub fn set(&mut self, key: &str, value: impl Into<String>, is_path: bool) {
        let mut value = value.into();
        if is_path {
            value = std::path::absolute(&value)
                .map(|p| p.display().to_string())
                .unwrap_or(value);
        }
        self.entries.insert(crate::io::normalize_key(key), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Invalid(format!("config key `{key}`: cannot parse `{raw}`"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Invalid(format!("missing required setting `{key}`")))?;
        let p = PathBuf::from(raw);
        Ok(match (&self.base_dir, p.is_relative()) {
            (Some(base), true) => base.join(p),
            _ => p,
        })
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Invalid(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

const HYPER_KEYS: [&str; 16] = [
    "mu_mean",
    "mu_var",
    "sigma_shape",
    "sigma_rate",
    "kappa_minus_shape",
    "kappa_minus_rate",
    "kappa_plus_shape",
    "kappa_plus_rate",
    "alpha_var",
    "kappa0",
    "beta_var",
    "b_var",
    "s_shape",
    "s_rate",
    "a_phi",
    "b_phi",
];

const FIT_KEYS: [&str; 13] = [
    "data",
    "design",
    "graph",
    "out_dir",
    "n_iter",
    "burn_in",
    "thin",
    "mh_scale",
    "rj_moves_per_sweep",
    "seed",
    "init",
    "chains",
    "parallel",
];

fn hyperparameters(s: &Settings) -> Result<Hyperparameters> {
    let d = Hyperparameters::default();
    let mut h = d;
    let m = &mut h.mixture;
    m.mu_mean = s.or("mu_mean", d.mixture.mu_mean)?;
    m.mu_var = s.or("mu_var", d.mixture.mu_var)?;
    m.sigma_shape = s.or("sigma_shape", d.mixture.sigma_shape)?;
    m.sigma_rate = s.or("sigma_rate", d.mixture.sigma_rate)?;
    m.kappa_minus_shape = s.or("kappa_minus_shape", d.mixture.kappa_minus_shape)?;
    m.kappa_minus_rate = s.or("kappa_minus_rate", d.mixture.kappa_minus_rate)?;
    m.kappa_plus_shape = s.or("kappa_plus_shape", d.mixture.kappa_plus_shape)?;
    m.kappa_plus_rate = s.or("kappa_plus_rate", d.mixture.kappa_plus_rate)?;
    m.alpha_var = s.or("alpha_var", d.mixture.alpha_var)?;
    m.kappa0 = s.or("kappa0", d.mixture.kappa0)?;
    h.sem.beta_var = s.or("beta_var", d.sem.beta_var)?;
    h.sem.b_var = s.or("b_var", d.sem.b_var)?;
    h.sem.s_shape = s.or("s_shape", d.sem.s_shape)?;
    h.sem.s_rate = s.or("s_rate", d.sem.s_rate)?;
    h.structure.a_phi = s.or("a_phi", d.structure.a_phi)?;
    h.structure.b_phi = s.or("b_phi", d.structure.b_phi)?;
    h.validate()?;
    h.structure.validate()?;
    Ok(h)
}

/// Everything `fit` needs, resolved from settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub design: PathBuf,
    pub graph: PathBuf,
    pub out_dir: PathBuf,
    pub sampler: SamplerConfig,
    pub hyper: Hyperparameters,
    pub chains: usize,
    /// Initial graph per chain; a shorter list repeats its last entry.
    pub inits: Vec<InitMode>,
    pub parallel: usize,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let known: Vec<&str> = FIT_KEYS.iter().chain(HYPER_KEYS.iter()).copied().collect();
        s.reject_unknown(&known)?;
        let defaults = SamplerConfig::default();
        let inits = match s.get("init") {
            None => vec![defaults.init_mode],
            Some(list) => list.split(',').map(InitMode::from_str).collect::<Result<Vec<_>>>()?,
        };
        let sampler = SamplerConfig {
            n_iter: s.or("n_iter", defaults.n_iter)?,
            burn_in: s.or("burn_in", defaults.burn_in)?,
            thin: s.or("thin", defaults.thin)?,
            mh_scale: s.or("mh_scale", defaults.mh_scale)?,
            rj_moves_per_sweep: s.parsed("rj_moves_per_sweep")?,
            seed: s.or("seed", defaults.seed)?,
            init_mode: inits[0],
        };
        sampler.validate()?;
        let chains: usize = s.or("chains", inits.len().max(1))?;
        if chains == 0 {
            return Err(Error::Invalid("chains must be at least 1".into()));
        }
        let parallel: usize = s.or("parallel", 1)?;
        if parallel == 0 {
            return Err(Error::Invalid("parallel must be at least 1".into()));
        }
        Ok(RunConfig {
            data: s.path("data")?,
            design: s.path("design")?,
            graph: s.path("graph")?,
            out_dir: s.path("out_dir")?,
            sampler,
            hyper: hyperparameters(s)?,
            chains,
            inits,
            parallel,
        })
    }

    pub fn init_for(&self, chain: usize) -> InitMode {
        self.inits[chain.min(self.inits.len() - 1)]
    }

    /// The effective configuration as `key = value` entries, with absolute
    /// paths and every default made explicit.
    pub fn to_entries(&self) -> IndexMap<String, String> {
        let abs = |p: &Path| {
            std::path::absolute(p)
                .unwrap_or_else(|_| p.to_path_buf())
                .display()
                .to_string()
        };
        let mut e = IndexMap::new();
        let mut put = |k: &str, v: String| {
            e.insert(k.to_string(), v);
        };
        put("data", abs(&self.data));
        put("design", abs(&self.design));
        put("graph", abs(&self.graph));
        put("out_dir", abs(&self.out_dir));
        let c = &self.sampler;
        put("n_iter", c.n_iter.to_string());
        put("burn_in", c.burn_in.to_string());
        put("thin", c.thin.to_string());
        put("mh_scale", c.mh_scale.to_string());
        if let Some(r) = c.rj_moves_per_sweep {
            put("rj_moves_per_sweep", r.to_string());
        }
        put("seed", c.seed.to_string());
        put(
            "init",
            (0..self.chains)
                .map(|k| self.init_for(k).to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("chains", self.chains.to_string());
        put("parallel", self.parallel.to_string());
        let h = &self.hyper;
        let m = &h.mixture;
        for (k, v) in [
            ("mu_mean", m.mu_mean),
            ("mu_var", m.mu_var),
            ("sigma_shape", m.sigma_shape),
            ("sigma_rate", m.sigma_rate),
            ("kappa_minus_shape", m.kappa_minus_shape),
            ("kappa_minus_rate", m.kappa_minus_rate),
            ("kappa_plus_shape", m.kappa_plus_shape),
            ("kappa_plus_rate", m.kappa_plus_rate),
            ("alpha_var", m.alpha_var),
            ("kappa0", m.kappa0),
            ("beta_var", h.sem.beta_var),
            ("b_var", h.sem.b_var),
            ("s_shape", h.sem.s_shape),
            ("s_rate", h.sem.s_rate),
            ("a_phi", h.structure.a_phi),
            ("b_phi", h.structure.b_phi),
        ] {
            put(k, v.to_string());
        }
        e
    }
}

/// Reads the expression matrix, the design and the prior graph.
pub fn load_inputs(data: &Path, design: &Path, graph: &Path) -> Result<(ExpressionDataset, PriorGraph)> {
    let expr = parse_expression(&read_text(data)?, &data.display().to_string())?;
    let design_table = parse_design(&read_text(design)?, &design.display().to_string())?;
    let dataset = assemble_dataset(expr, &design_table)?;
    let g0 = parse_edge_list(&read_text(graph)?, &graph.display().to_string(), dataset.gene_ids())?;
    Ok((dataset, g0))
}

pub fn chain_dir(out_dir: &Path, chain: usize) -> PathBuf {
    out_dir.join(format!("chain_{chain}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainRecord {
    pub chain: usize,
    pub seed: u64,
    pub init: String,
    pub wall_seconds: f64,
    pub retained_draws: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: IndexMap<String, String>,
    pub genes: usize,
    pub samples: usize,
    pub prior_edges: usize,
    pub chains: Vec<ChainRecord>,
    pub wall_seconds: f64,
}

/// Runs `config.chains` chains, chain `c` seeded with `seed + c`, at most
/// `config.parallel` at a time, and writes one trace directory per chain
/// plus the manifest and the effective configuration.
pub fn fit(config: &RunConfig) -> Result<Manifest> {
    let started = Instant::now();
    let (data, g0) = load_inputs(&config.data, &config.design, &config.graph)?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let chains: Vec<usize> = (0..config.chains).collect();
    let mut records = Vec::new();
    for batch in chains.chunks(config.parallel) {
        let results: Vec<Result<ChainRecord>> = std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&c| {
                    let data = &data;
                    let g0 = &g0;
                    scope.spawn(move || fit_one(config, data, g0, c))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        });
        for r in results {
            records.push(r?);
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_entries(),
        genes: data.genes(),
        samples: data.samples(),
        prior_edges: g0.edge_count(),
        chains: records,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_atomic(
        &config.out_dir.join(RUN_CONFIG_FILE),
        format_config(&manifest.config).as_bytes(),
    )?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&config.out_dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

fn fit_one(config: &RunConfig, data: &ExpressionDataset, g0: &PriorGraph, chain: usize) -> Result<ChainRecord> {
    let started = Instant::now();
    let sampler = SamplerConfig {
        seed: config.sampler.seed.wrapping_add(chain as u64),
        init_mode: config.init_for(chain),
        ..config.sampler.clone()
    };
    let (trace, stats) = run_chain(data, g0, &config.hyper, &sampler, chain)?;
    trace.write(&chain_dir(&config.out_dir, chain), &stats)?;
    Ok(ChainRecord {
        chain,
        seed: sampler.seed,
        init: sampler.init_mode.to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        retained_draws: trace.draws(),
    })
}

/// Reads every chain under `dir`: either `dir` itself is a trace directory
/// or it holds `chain_<k>` subdirectories.
pub fn read_traces(dir: &Path) -> Result<Vec<(TraceStore, MoveStats)>> {
    if dir.join(META_FILE).is_file() {
        return Ok(vec![TraceStore::read(dir)?]);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut chains: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(k) = name.strip_prefix("chain_").and_then(|k| k.parse().ok()) {
            if entry.path().join(META_FILE).is_file() {
                chains.push((k, entry.path()));
            }
        }
    }
    if chains.is_empty() {
        return Err(Error::Invalid(format!(
            "{} contains no trace directories",
            dir.display()
        )));
    }
    chains.sort();
    chains.into_iter().map(|(_, p)| TraceStore::read(&p)).collect()
}

/// Pooled trace and posterior summary of every chain under `dir`.
pub fn pooled_summary(dir: &Path) -> Result<(TraceStore, PosteriorSummary)> {
    let traces = read_traces(dir)?;
    let stores: Vec<TraceStore> = traces.into_iter().map(|(t, _)| t).collect();
    let pooled = TraceStore::pool(&stores)?;
    let summary = compute_summary(&pooled)?;
    Ok((pooled, summary))
}

pub const PSTAR_FILE: &str = "summary_pstar.tsv";
pub const EDGE_SUMMARY_FILE: &str = "summary_edges.tsv";
pub const SELECTED_FILE: &str = "selected_graph.edges";
pub const DEGREE_FILE: &str = "degree_posterior.tsv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";
pub const EVALUATION_FILE: &str = "evaluation.txt";

/// Writes the summary tables and the selected graph into `out`.
pub fn summarize(trace_dir: &Path, out: &Path, threshold: f64) -> Result<(PosteriorSummary, SelectedGraph)> {
    let (pooled, summary) = pooled_summary(trace_dir)?;
    let g0 = pooled.meta.prior_graph()?;
    let genes = &pooled.meta.gene_ids;
    let selected = select_median_model(&summary, &g0, threshold);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_atomic(
        &out.join(PSTAR_FILE),
        format_pstar(&summary, genes, &pooled.meta.sample_ids).as_bytes(),
    )?;
    write_atomic(
        &out.join(EDGE_SUMMARY_FILE),
        format_edges(&summary, &g0, genes).as_bytes(),
    )?;
    write_atomic(
        &out.join(SELECTED_FILE),
        format_edge_list(selected.edges.iter().map(|s| &s.edge), genes).as_bytes(),
    )?;
    write_atomic(
        &out.join(DEGREE_FILE),
        format_degree_posterior(&summary, genes).as_bytes(),
    )?;
    Ok((summary, selected))
}

/// Compares the median model of the traces under `trace_dir` with a truth
/// file and writes the key-value report into `out`.
pub fn evaluate(trace_dir: &Path, truth_path: &Path, out: &Path, threshold: f64) -> Result<Evaluation> {
    let truth = TruthFile::parse(&read_text(truth_path)?, &truth_path.display().to_string())?;
    let (pooled, summary) = pooled_summary(trace_dir)?;
    if truth.gene_ids != pooled.meta.gene_ids {
        return Err(Error::Dimension("truth file and traces name different genes".into()));
    }
    let g0 = pooled.meta.prior_graph()?;
    let selected = select_median_model(&summary, &g0, threshold);
    let true_edges: Vec<DirectedEdge> = truth.true_edges();
    let eval = evaluate_against_truth(&selected, &true_edges, truth.gene_ids.len())?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let report = format!("threshold = {threshold}\n{}", eval.to_key_values());
    write_atomic(&out.join(EVALUATION_FILE), report.as_bytes())?;
    Ok(eval)
}

pub fn diagnose(trace_dir: &Path, out: &Path) -> Result<Diagnostics> {
    let traces = read_traces(trace_dir)?;
    let report = diagnostics(&traces)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_atomic(&out.join(DIAGNOSTICS_FILE), report.to_string().as_bytes())?;
    Ok(report)
}

const SIM_KEYS: [&str; 19] = [
    "out_dir",
    "p",
    "n",
    "pi0",
    "target_edges",
    "group_split",
    "false_edges",
    "seed",
    "sigma_b2",
    "b_mean_intercept",
    "b_mean_group",
    "low_mean",
    "low_sd",
    "normal_mean",
    "normal_sd",
    "high_mean",
    "high_sd",
    "cut_low",
    "cut_high",
];

pub fn simulation_config(s: &Settings) -> Result<(SimulationConfig, PathBuf)> {
    s.reject_unknown(&SIM_KEYS)?;
    let d = SimulationConfig::default();
    let t = d.mixture_truth;
    let p: usize = s.or("p", d.p)?;
    let n: usize = s.or("n", d.n)?;
    let mut cfg = SimulationConfig {
        p,
        n,
        pi0: s.parsed("pi0")?,
        target_edges: s.parsed("target_edges")?,
        group_split: s.or("group_split", n / 2)?,
        false_edge_count: s.or("false_edges", d.false_edge_count)?,
        mixture_truth: t,
        b_mean: [
            s.or("b_mean_intercept", d.b_mean[0])?,
            s.or("b_mean_group", d.b_mean[1])?,
        ],
        sigma_b2: s.or("sigma_b2", d.sigma_b2)?,
        seed: s.or("seed", d.seed)?,
    };
    let m = &mut cfg.mixture_truth;
    m.low.mean = s.or("low_mean", t.low.mean)?;
    m.low.sd = s.or("low_sd", t.low.sd)?;
    m.normal.mean = s.or("normal_mean", t.normal.mean)?;
    m.normal.sd = s.or("normal_sd", t.normal.sd)?;
    m.high.mean = s.or("high_mean", t.high.mean)?;
    m.high.sd = s.or("high_sd", t.high.sd)?;
    m.cut_low = s.or("cut_low", t.cut_low)?;
    m.cut_high = s.or("cut_high", t.cut_high)?;
    cfg.validate()?;
    Ok((cfg, s.path("out_dir")?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub seed: u64,
    pub genes: usize,
    pub samples: usize,
    pub true_edges: usize,
    pub false_edges: usize,
}

/// Generates a dataset and writes expression, design, prior graph and
/// truth files into `out`.
pub fn simulate(cfg: &SimulationConfig, out: &Path) -> Result<SimulationReport> {
    let (data, truth) = gen_dataset(cfg)?;
    let (g0, _) = gen_prior_graph(&truth)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_atomic(&out.join(EXPRESSION_FILE), format_expression(&data).as_bytes())?;
    let covariates = ["intercept".to_string(), "group".to_string()];
    write_atomic(&out.join(DESIGN_FILE), format_design(&data, &covariates).as_bytes())?;
    write_atomic(
        &out.join(GRAPH_FILE),
        format_edge_list(g0.edges(), data.gene_ids()).as_bytes(),
    )?;
    let truth_file = TruthFile::new(cfg, &data, &truth, &g0);
    write_atomic(&out.join(TRUTH_FILE), truth_file.to_json().as_bytes())?;
    Ok(SimulationReport {
        seed: cfg.seed,
        genes: data.genes(),
        samples: data.samples(),
        true_edges: truth.e_star.len(),
        false_edges: truth.e_tilde.len(),
    })
}
