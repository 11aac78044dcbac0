//! The chain driver.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PriorGraph;
use crate::model::data::ExpressionDataset;
use crate::model::params::Hyperparameters;
use crate::model::state::ChainState;
use crate::sampler::init::initial_state;
use crate::sampler::stats::MoveStats;
use crate::sampler::{sweep, Model, SweepPlan};
use crate::trace::{TraceMeta, TraceStore};

/// Sweeps between exact recomputations of `B^-1`, `log|det B|` and the
/// score caches.
pub const REFRESH_INTERVAL: usize = 1000;

/// Largest tolerated drift of the incrementally updated `log|det B|`.
pub const DETERMINANT_TOLERANCE: f64 = 1e-8;

/// Starting graph of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Every prior edge included.
    Full,
    /// No edges.
    Empty,
    /// Each prior edge included with probability one half.
    Random,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Full => "full",
            InitMode::Empty => "empty",
            InitMode::Random => "random",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" | "prior-graph-full" => Ok(InitMode::Full),
            "empty" | "empty-graph" => Ok(InitMode::Empty),
            "random" => Ok(InitMode::Random),
            other => Err(Error::Invalid(format!(
                "unknown init mode `{other}` (expected full, empty or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Scale `c` of the row-wise proposal covariance.
    pub mh_scale: f64,
    /// Reversible-jump attempts per sweep; `None` means one per prior edge.
    pub rj_moves_per_sweep: Option<usize>,
    pub seed: u64,
    pub init_mode: InitMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_iter: 100_000,
            burn_in: 50_000,
            thin: 10,
            mh_scale: 1.0,
            rj_moves_per_sweep: None,
            seed: 1,
            init_mode: InitMode::Full,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(Error::Invalid(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Invalid("thin must be at least 1".into()));
        }
        if !(self.mh_scale > 0.0 && self.mh_scale.is_finite()) {
            return Err(Error::Invalid(format!(
                "mh_scale must be positive, got {}",
                self.mh_scale
            )));
        }
        Ok(())
    }
}

/// Runs one chain with its own seeded generator from the state given by
/// `config.init_mode`. `chain` is only recorded in the trace metadata.
pub fn run_chain(
    data: &ExpressionDataset,
    g0: &PriorGraph,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
    chain: usize,
) -> Result<(TraceStore, MoveStats)> {
    config.validate()?;
    hyper.validate()?;
    if g0.node_count() != data.genes() {
        return Err(Error::Dimension(format!(
            "prior graph has {} nodes but the data have {} genes",
            g0.node_count(),
            data.genes()
        )));
    }
    let model = Model::new(data, g0, hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_state(&model, config.init_mode, &mut rng)?;
    let plan = SweepPlan::full(config.mh_scale, config.rj_moves_per_sweep.unwrap_or(g0.edge_count()));
    let mut stats = MoveStats::new(g0.edge_count());
    let meta = TraceMeta {
        gene_ids: data.gene_ids().to_vec(),
        sample_ids: data.sample_ids().to_vec(),
        covariates: data.covariates(),
        prior_edges: g0.edges().map(|e| (e.src.0, e.dst.0)).collect(),
        n_iter: config.n_iter,
        burn_in: config.burn_in,
        thin: config.thin,
        seed: config.seed,
        chain,
        init: config.init_mode.to_string(),
    };
    let mut trace = TraceStore::new(meta);
    for t in 1..=config.n_iter {
        sweep(&model, &mut state, &plan, &mut stats, &mut rng).map_err(|e| numerical(t, e))?;
        check_finite(&state).map_err(|message| Error::Numerical { iteration: t, message })?;
        if t % REFRESH_INTERVAL == 0 {
            refresh(data, &mut state).map_err(|e| numerical(t, e))?;
        }
        trace.observe(&state, g0);
    }
    Ok((trace, stats))
}

fn numerical(iteration: usize, e: Error) -> Error {
    match e {
        Error::Numerical { .. } => e,
        other => Error::Numerical {
            iteration,
            message: other.to_string(),
        },
    }
}

/// Recomputes `B^-1` and the score caches from scratch, failing when the
/// incrementally maintained determinant has drifted.
pub fn refresh(data: &ExpressionDataset, state: &mut ChainState) -> Result<()> {
    let drift = state.sem.structure.refresh()?;
    if !(drift <= DETERMINANT_TOLERANCE) {
        return Err(Error::Invalid(format!("log-determinant drifted by {drift}")));
    }
    state.refresh_cache(data);
    Ok(())
}

fn check_finite(state: &ChainState) -> std::result::Result<(), String> {
    let m = &state.mixture;
    let blocks: [(&str, &[f64]); 6] = [
        ("alpha", &m.alpha),
        ("mu", &m.mu),
        ("sigma2", &m.sigma2),
        ("kappa_minus", &m.kappa_minus),
        ("kappa_plus", &m.kappa_plus),
        ("s2", &state.sem.s2),
    ];
    for (name, values) in blocks {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(format!("{name}[{pos}] is not finite"));
        }
    }
    if !state.sem.structure.log_abs_det().is_finite() {
        return Err("log|det B| is not finite".into());
    }
    Ok(())
}
