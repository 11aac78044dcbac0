//! Retained MCMC draws, in memory and on disk.
//!
//! A trace directory holds `trace_meta.json`, `theta.csv` (long format:
//! iteration, parameter, value), `edges.csv` (iteration, edge_index,
//! included, beta), `scores_summary.csv` (per-cell counts of high and low
//! class draws), `edge_count.csv` (`k_G` at every iteration, burn-in
//! included) and `stats.json` (move statistics).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph};
use crate::io::write_atomic;
use crate::model::density::ExpressionClass;
use crate::model::state::ChainState;
use crate::sampler::stats::MoveStats;

pub const META_FILE: &str = "trace_meta.json";
pub const THETA_FILE: &str = "theta.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const SCORES_FILE: &str = "scores_summary.csv";
pub const EDGE_COUNT_FILE: &str = "edge_count.csv";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub covariates: usize,
    /// `(src, dst)` of every prior edge, in prior-graph order.
    pub prior_edges: Vec<(usize, usize)>,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain: usize,
    pub init: String,
}

impl TraceMeta {
    /// Whether iteration `t` (1-based) is stored.
    pub fn retains(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in).is_multiple_of(self.thin)
    }

    pub fn prior_graph(&self) -> Result<PriorGraph> {
        PriorGraph::from_edges(
            self.gene_ids.len(),
            self.prior_edges.iter().map(|&(s, d)| DirectedEdge::new(s, d)),
        )
    }

    fn same_universe(&self, other: &TraceMeta) -> bool {
        self.gene_ids == other.gene_ids
            && self.sample_ids == other.sample_ids
            && self.prior_edges == other.prior_edges
            && self.covariates == other.covariates
    }
}

/// Names of the scalar parameters stored per retained draw, in storage
/// order.
pub fn theta_names(p: usize, n: usize, d: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(n + 6 * p + p * d + 1);
    names.extend((0..n).map(|j| format!("alpha[{j}]")));
    for block in ["mu", "sigma2", "kappa_minus", "kappa_plus", "s2"] {
        names.extend((0..p).map(|i| format!("{block}[{i}]")));
    }
    for i in 0..p {
        names.extend((0..d).map(|c| format!("b[{i}][{c}]")));
    }
    names.push("phi".to_string());
    names
}

/// Draws of one chain (or several pooled chains).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStore {
    pub meta: TraceMeta,
    pub theta_names: Vec<String>,
    /// Iteration number of every retained draw.
    pub iterations: Vec<usize>,
    /// `iterations.len() x theta_names.len()`, row-major.
    pub theta: Vec<f64>,
    /// `iterations.len() x K` inclusion flags.
    pub included: Vec<bool>,
    /// `iterations.len() x K` coefficients (0 when excluded).
    pub beta: Vec<f64>,
    /// Per-cell (gene-major) counts of retained draws in the high class.
    pub plus_counts: Vec<u64>,
    pub minus_counts: Vec<u64>,
    pub score_draws: u64,
    /// `(chain, iteration, k_G)` for every iteration run; the chain column
    /// is kept in memory only, so pooled traces stay distinguishable.
    pub edge_counts: Vec<(usize, usize, usize)>,
}

impl TraceStore {
    pub fn new(meta: TraceMeta) -> Self {
        let (p, n) = (meta.gene_ids.len(), meta.sample_ids.len());
        let theta_names = theta_names(p, n, meta.covariates);
        TraceStore {
            meta,
            theta_names,
            iterations: Vec::new(),
            theta: Vec::new(),
            included: Vec::new(),
            beta: Vec::new(),
            plus_counts: vec![0; p * n],
            minus_counts: vec![0; p * n],
            score_draws: 0,
            edge_counts: Vec::new(),
        }
    }

    pub fn genes(&self) -> usize {
        self.meta.gene_ids.len()
    }

    pub fn samples(&self) -> usize {
        self.meta.sample_ids.len()
    }

    pub fn prior_edge_count(&self) -> usize {
        self.meta.prior_edges.len()
    }

    pub fn draws(&self) -> usize {
        self.iterations.len()
    }

    /// Records `k_G` after iteration `state.iteration`, and the full draw
    /// when that iteration is retained.
    pub fn observe(&mut self, state: &ChainState, g0: &PriorGraph) {
        let t = state.iteration;
        self.edge_counts.push((self.meta.chain, t, state.edge_count()));
        if !self.meta.retains(t) {
            return;
        }
        self.iterations.push(t);
        let m = &state.mixture;
        self.theta.extend_from_slice(&m.alpha);
        for block in [&m.mu, &m.sigma2, &m.kappa_minus, &m.kappa_plus, &state.sem.s2] {
            self.theta.extend_from_slice(block);
        }
        self.theta.extend_from_slice(state.sem.b_coeffs.as_slice());
        self.theta.push(state.phi);
        for (idx, e) in g0.edges().enumerate() {
            self.included.push(state.active[idx]);
            self.beta.push(if state.active[idx] {
                state.sem.structure.beta(e.dst.0, e.src.0)
            } else {
                0.0
            });
        }
        for (cell, &class) in state.latent.classes().iter().enumerate() {
            match class {
                ExpressionClass::High => self.plus_counts[cell] += 1,
                ExpressionClass::Low => self.minus_counts[cell] += 1,
                ExpressionClass::Normal => {}
            }
        }
        self.score_draws += 1;
    }

    pub fn theta_row(&self, draw: usize) -> &[f64] {
        let w = self.theta_names.len();
        &self.theta[draw * w..(draw + 1) * w]
    }

    pub fn included_row(&self, draw: usize) -> &[bool] {
        let k = self.prior_edge_count();
        &self.included[draw * k..(draw + 1) * k]
    }

    pub fn beta_row(&self, draw: usize) -> &[f64] {
        let k = self.prior_edge_count();
        &self.beta[draw * k..(draw + 1) * k]
    }

    /// Column of one named parameter across retained draws.
    pub fn parameter(&self, name: &str) -> Option<Vec<f64>> {
        let col = self.theta_names.iter().position(|n| n == name)?;
        Some((0..self.draws()).map(|d| self.theta_row(d)[col]).collect())
    }

    /// `k_G` of every retained draw.
    pub fn retained_edge_counts(&self) -> Vec<usize> {
        (0..self.draws())
            .map(|d| self.included_row(d).iter().filter(|&&b| b).count())
            .collect()
    }

    /// Concatenates the draws of several chains over the same universe.
    pub fn pool(stores: &[TraceStore]) -> Result<TraceStore> {
        let first = stores.first().ok_or(Error::EmptyTrace)?;
        let mut out = first.clone();
        for s in &stores[1..] {
            if !first.meta.same_universe(&s.meta) {
                return Err(Error::Dimension(
                    "pooled traces cover different genes, samples or prior graphs".into(),
                ));
            }
            out.iterations.extend_from_slice(&s.iterations);
            out.theta.extend_from_slice(&s.theta);
            out.included.extend_from_slice(&s.included);
            out.beta.extend_from_slice(&s.beta);
            for (a, b) in out.plus_counts.iter_mut().zip(&s.plus_counts) {
                *a += b;
            }
            for (a, b) in out.minus_counts.iter_mut().zip(&s.minus_counts) {
                *a += b;
            }
            out.score_draws += s.score_draws;
            out.edge_counts.extend_from_slice(&s.edge_counts);
        }
        Ok(out)
    }

    /// Writes the trace files into `dir` (created if missing). Each file
    /// is written atomically.
    pub fn write(&self, dir: &Path, stats: &MoveStats) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        write_atomic(&dir.join(META_FILE), meta.as_bytes())?;

        let mut theta = String::from("iteration,parameter,value\n");
        for (d, &t) in self.iterations.iter().enumerate() {
            for (name, v) in self.theta_names.iter().zip(self.theta_row(d)) {
                theta.push_str(&format!("{t},{name},{v}\n"));
            }
        }
        write_atomic(&dir.join(THETA_FILE), theta.as_bytes())?;

        let mut edges = String::from("iteration,edge_index,included,beta\n");
        for (d, &t) in self.iterations.iter().enumerate() {
            for (k, (&inc, &b)) in self.included_row(d).iter().zip(self.beta_row(d)).enumerate() {
                edges.push_str(&format!("{t},{k},{},{b}\n", u8::from(inc)));
            }
        }
        write_atomic(&dir.join(EDGES_FILE), edges.as_bytes())?;

        let n = self.samples();
        let mut scores = String::from("gene,sample,plus,minus,draws\n");
        for (cell, (&pl, &mi)) in self.plus_counts.iter().zip(&self.minus_counts).enumerate() {
            scores.push_str(&format!("{},{},{pl},{mi},{}\n", cell / n, cell % n, self.score_draws));
        }
        write_atomic(&dir.join(SCORES_FILE), scores.as_bytes())?;

        let mut counts = String::from("iteration,k_G\n");
        for &(_, t, k) in &self.edge_counts {
            counts.push_str(&format!("{t},{k}\n"));
        }
        write_atomic(&dir.join(EDGE_COUNT_FILE), counts.as_bytes())?;

        let stats = serde_json::to_string_pretty(stats).expect("stats serialize");
        write_atomic(&dir.join(STATS_FILE), stats.as_bytes())?;
        Ok(())
    }

    /// Reads a trace directory written by [`write`](Self::write).
    pub fn read(dir: &Path) -> Result<(TraceStore, MoveStats)> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let meta = parse_meta(&read(META_FILE)?)?;
        let stats = parse_stats(&read(STATS_FILE)?)?;
        let mut store = TraceStore::new(meta);
        if stats.edge_births.len() != store.prior_edge_count() {
            return Err(Error::parse(
                STATS_FILE,
                0,
                "edge counters do not match the prior graph",
            ));
        }
        parse_theta(&read(THETA_FILE)?, &mut store)?;
        parse_edges(&read(EDGES_FILE)?, &mut store)?;
        parse_scores(&read(SCORES_FILE)?, &mut store)?;
        let chain = store.meta.chain;
        store.edge_counts = parse_edge_counts(&read(EDGE_COUNT_FILE)?)?
            .into_iter()
            .map(|(t, k)| (chain, t, k))
            .collect();
        Ok((store, stats))
    }
}

pub fn parse_meta(text: &str) -> Result<TraceMeta> {
    let meta: TraceMeta = serde_json::from_str(text).map_err(|e| Error::parse(META_FILE, e.line(), e.to_string()))?;
    if meta.thin == 0 || meta.burn_in >= meta.n_iter {
        return Err(Error::parse(META_FILE, 0, "inconsistent burn-in, thinning or length"));
    }
    let p = meta.gene_ids.len();
    if meta.prior_edges.iter().any(|&(s, d)| s >= p || d >= p || s == d) {
        return Err(Error::parse(META_FILE, 0, "prior edge outside the gene set"));
    }
    meta.prior_graph()
        .map_err(|e| Error::parse(META_FILE, 0, e.to_string()))?;
    Ok(meta)
}

pub fn parse_stats(text: &str) -> Result<MoveStats> {
    let stats: MoveStats = serde_json::from_str(text).map_err(|e| Error::parse(STATS_FILE, e.line(), e.to_string()))?;
    if stats.edge_births.len() != stats.edge_deaths.len() {
        return Err(Error::parse(STATS_FILE, 0, "birth and death counters differ in length"));
    }
    let all = stats
        .kernels
        .iter()
        .map(|(_, c)| c)
        .chain(&stats.edge_births)
        .chain(&stats.edge_deaths);
    for c in all {
        if c.accepted > c.proposed {
            return Err(Error::parse(STATS_FILE, 0, "more acceptances than proposals"));
        }
    }
    Ok(stats)
}

/// Data lines of a CSV body with the expected header, numbered from 2.
fn data_lines<'a>(
    text: &'a str,
    file: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == header => {}
        _ => return Err(Error::parse(file, 1, format!("expected header `{header}`"))),
    }
    Ok(lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| (k + 2, l.trim_end().split(',').collect())))
}

fn field<T: std::str::FromStr>(fields: &[&str], col: usize, file: &str, line: usize) -> Result<T> {
    let raw = fields
        .get(col)
        .ok_or_else(|| Error::parse(file, line, format!("missing column {}", col + 1)))?;
    raw.parse()
        .map_err(|_| Error::parse(file, line, format!("cannot parse `{raw}`")))
}

fn expect_width(fields: &[&str], width: usize, file: &str, line: usize) -> Result<()> {
    if fields.len() != width {
        return Err(Error::parse(
            file,
            line,
            format!("expected {width} columns, found {}", fields.len()),
        ));
    }
    Ok(())
}

/// Parses `theta.csv` into `store`, whose metadata fixes the expected
/// parameter names and retained iterations.
pub fn parse_theta(text: &str, store: &mut TraceStore) -> Result<()> {
    let width = store.theta_names.len();
    let mut iterations = Vec::new();
    let mut values = Vec::new();
    for (line, fields) in data_lines(text, THETA_FILE, "iteration,parameter,value")? {
        expect_width(&fields, 3, THETA_FILE, line)?;
        let t: usize = field(&fields, 0, THETA_FILE, line)?;
        let v: f64 = field(&fields, 2, THETA_FILE, line)?;
        let slot = values.len() % width;
        if fields[1] != store.theta_names[slot] {
            return Err(Error::parse(
                THETA_FILE,
                line,
                format!(
                    "expected parameter `{}`, found `{}`",
                    store.theta_names[slot], fields[1]
                ),
            ));
        }
        if slot == 0 {
            if !store.meta.retains(t) || iterations.last().is_some_and(|&last| t <= last) {
                return Err(Error::parse(
                    THETA_FILE,
                    line,
                    format!("iteration {t} is not a retained iteration"),
                ));
            }
            iterations.push(t);
        } else if iterations.last() != Some(&t) {
            return Err(Error::parse(THETA_FILE, line, "iteration changes inside a draw"));
        }
        values.push(v);
    }
    if values.len() % width != 0 {
        return Err(Error::parse(THETA_FILE, 0, "truncated final draw"));
    }
    store.iterations = iterations;
    store.theta = values;
    Ok(())
}

/// Parses `edges.csv`; the iterations must match those already read from
/// `theta.csv`.
pub fn parse_edges(text: &str, store: &mut TraceStore) -> Result<()> {
    let k = store.prior_edge_count();
    let mut included = Vec::with_capacity(store.draws() * k);
    let mut beta = Vec::with_capacity(store.draws() * k);
    for (line, fields) in data_lines(text, EDGES_FILE, "iteration,edge_index,included,beta")? {
        expect_width(&fields, 4, EDGES_FILE, line)?;
        let t: usize = field(&fields, 0, EDGES_FILE, line)?;
        let idx: usize = field(&fields, 1, EDGES_FILE, line)?;
        let inc: u8 = field(&fields, 2, EDGES_FILE, line)?;
        let b: f64 = field(&fields, 3, EDGES_FILE, line)?;
        let pos = included.len();
        if k == 0 || idx != pos % k || store.iterations.get(pos / k) != Some(&t) {
            return Err(Error::parse(
                EDGES_FILE,
                line,
                "row out of order or not matching theta.csv",
            ));
        }
        if inc > 1 || (inc == 0 && b != 0.0) || !b.is_finite() {
            return Err(Error::parse(EDGES_FILE, line, "invalid inclusion flag or coefficient"));
        }
        included.push(inc == 1);
        beta.push(b);
    }
    if included.len() != store.draws() * k {
        return Err(Error::parse(
            EDGES_FILE,
            0,
            "edge draws do not cover every retained iteration",
        ));
    }
    store.included = included;
    store.beta = beta;
    Ok(())
}

pub fn parse_scores(text: &str, store: &mut TraceStore) -> Result<()> {
    let (p, n) = (store.genes(), store.samples());
    let mut plus = Vec::with_capacity(p * n);
    let mut minus = Vec::with_capacity(p * n);
    let mut draws = None;
    for (line, fields) in data_lines(text, SCORES_FILE, "gene,sample,plus,minus,draws")? {
        expect_width(&fields, 5, SCORES_FILE, line)?;
        let i: usize = field(&fields, 0, SCORES_FILE, line)?;
        let j: usize = field(&fields, 1, SCORES_FILE, line)?;
        let pl: u64 = field(&fields, 2, SCORES_FILE, line)?;
        let mi: u64 = field(&fields, 3, SCORES_FILE, line)?;
        let d: u64 = field(&fields, 4, SCORES_FILE, line)?;
        if n == 0 || i * n + j != plus.len() || j >= n {
            return Err(Error::parse(SCORES_FILE, line, "cell out of order"));
        }
        if *draws.get_or_insert(d) != d || pl.checked_add(mi).is_none_or(|s| s > d) {
            return Err(Error::parse(SCORES_FILE, line, "inconsistent draw counts"));
        }
        plus.push(pl);
        minus.push(mi);
    }
    if plus.len() != p * n {
        return Err(Error::parse(SCORES_FILE, 0, "missing cells"));
    }
    store.plus_counts = plus;
    store.minus_counts = minus;
    store.score_draws = draws.unwrap_or(0);
    Ok(())
}

/// Parses `edge_count.csv` into `(iteration, k_G)` pairs.
pub fn parse_edge_counts(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (line, fields) in data_lines(text, EDGE_COUNT_FILE, "iteration,k_G")? {
        expect_width(&fields, 2, EDGE_COUNT_FILE, line)?;
        out.push((
            field(&fields, 0, EDGE_COUNT_FILE, line)?,
            field(&fields, 1, EDGE_COUNT_FILE, line)?,
        ));
    }
    Ok(out)
}
