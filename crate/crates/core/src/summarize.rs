//! Posterior summaries, median-model selection, evaluation against a
//! known truth and convergence diagnostics.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph};
use crate::model::matrix::RowMatrix;
use crate::sampler::stats::{Kernel, MoveStats};
use crate::trace::TraceStore;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub pi_plus: RowMatrix,
    pub pi_minus: RowMatrix,
    pub p_star: RowMatrix,
    /// Inclusion probability per prior edge.
    pub v: Vec<f64>,
    /// Model-averaged coefficient (excluded draws count as zero).
    pub beta_mean: Vec<f64>,
    /// Mean coefficient over the draws that include the edge.
    pub beta_mean_given_inclusion: Vec<Option<f64>>,
    /// Per gene, probabilities of 0, 1, ..., `deg_G0(i)` neighbours.
    pub degree_posterior: Vec<Vec<f64>>,
    /// `(chain, iteration, k_G)` over every iteration run.
    pub edge_count_trace: Vec<(usize, usize, usize)>,
    pub draws: usize,
}

/// Posterior summaries of a (possibly pooled) trace.
pub fn compute_summary(trace: &TraceStore) -> Result<PosteriorSummary> {
    let draws = trace.draws();
    if draws == 0 || trace.score_draws == 0 {
        return Err(Error::EmptyTrace);
    }
    let (p, n) = (trace.genes(), trace.samples());
    let total = trace.score_draws as f64;
    let pi_plus = RowMatrix::from_fn(p, n, |i, j| trace.plus_counts[i * n + j] as f64 / total);
    let pi_minus = RowMatrix::from_fn(p, n, |i, j| trace.minus_counts[i * n + j] as f64 / total);
    let p_star = RowMatrix::from_fn(p, n, |i, j| pi_plus[(i, j)] - pi_minus[(i, j)]);

    let k = trace.prior_edge_count();
    let mut hits = vec![0usize; k];
    let mut beta_sum = vec![0.0; k];
    for d in 0..draws {
        for (e, (&inc, &b)) in trace.included_row(d).iter().zip(trace.beta_row(d)).enumerate() {
            if inc {
                hits[e] += 1;
                beta_sum[e] += b;
            }
        }
    }
    let v = hits.iter().map(|&h| h as f64 / draws as f64).collect();
    let beta_mean = beta_sum.iter().map(|&s| s / draws as f64).collect();
    let beta_mean_given_inclusion = hits
        .iter()
        .zip(&beta_sum)
        .map(|(&h, &s)| (h > 0).then(|| s / h as f64))
        .collect();

    let g0 = trace.meta.prior_graph()?;
    let degree_posterior = degree_posterior(trace, &g0);
    Ok(PosteriorSummary {
        pi_plus,
        pi_minus,
        p_star,
        v,
        beta_mean,
        beta_mean_given_inclusion,
        degree_posterior,
        edge_count_trace: trace.edge_counts.clone(),
        draws,
    })
}

/// Neighbour-count distribution of every gene over the retained graphs; a
/// reciprocal pair counts once.
fn degree_posterior(trace: &TraceStore, g0: &PriorGraph) -> Vec<Vec<f64>> {
    let p = trace.genes();
    // for every gene, its G0 neighbours and the edge indices linking them
    let mut links: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); p];
    for (idx, e) in g0.edges().enumerate() {
        for (a, b) in [(e.src.0, e.dst.0), (e.dst.0, e.src.0)] {
            match links[a].iter_mut().find(|(nb, _)| *nb == b) {
                Some((_, ids)) => ids.push(idx),
                None => links[a].push((b, vec![idx])),
            }
        }
    }
    let draws = trace.draws();
    let mut counts: Vec<Vec<usize>> = links.iter().map(|l| vec![0; l.len() + 1]).collect();
    for d in 0..draws {
        let inc = trace.included_row(d);
        for (i, l) in links.iter().enumerate() {
            let deg = l.iter().filter(|(_, ids)| ids.iter().any(|&k| inc[k])).count();
            counts[i][deg] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / draws as f64).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedEdge {
    pub index: usize,
    pub edge: DirectedEdge,
    pub v: f64,
    pub beta_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedGraph {
    pub threshold: f64,
    pub edges: Vec<SelectedEdge>,
}

impl SelectedGraph {
    pub fn contains(&self, e: &DirectedEdge) -> bool {
        self.edges.iter().any(|s| s.edge == *e)
    }
}

/// Edges with inclusion probability strictly above `threshold`.
pub fn select_median_model(summary: &PosteriorSummary, g0: &PriorGraph, threshold: f64) -> SelectedGraph {
    let edges = g0
        .edges()
        .enumerate()
        .filter(|&(k, _)| summary.v[k] > threshold)
        .map(|(k, e)| SelectedEdge {
            index: k,
            edge: *e,
            v: summary.v[k],
            beta_mean: summary.beta_mean[k],
        })
        .collect();
    SelectedGraph { threshold, edges }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fdr: f64,
    pub power: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub selected: usize,
    pub true_edges: usize,
}

impl Evaluation {
    /// `key = value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "fdr = {}\npower = {}\ntrue_positives = {}\nfalse_positives = {}\nfalse_negatives = {}\nselected = {}\ntrue_edges = {}\n",
            self.fdr,
            self.power,
            self.true_positives,
            self.false_positives,
            self.false_negatives,
            self.selected,
            self.true_edges
        )
    }
}

/// Realized FDR `FP / max(1, FP + TP)` and power `TP / |E*|` over directed
/// edges. With no true edges power is reported as 1.
pub fn evaluate_against_truth(selected: &SelectedGraph, true_edges: &[DirectedEdge], p: usize) -> Result<Evaluation> {
    let out_of_range = selected
        .edges
        .iter()
        .map(|s| s.edge)
        .chain(true_edges.iter().copied())
        .find(|e| e.src.0 >= p || e.dst.0 >= p);
    if let Some(e) = out_of_range {
        return Err(Error::NodeOutOfRange {
            index: e.src.0.max(e.dst.0),
            p,
        });
    }
    let tp = selected.edges.iter().filter(|s| true_edges.contains(&s.edge)).count();
    let fp = selected.edges.len() - tp;
    let fdr = fp as f64 / (fp + tp).max(1) as f64;
    let power = if true_edges.is_empty() {
        1.0
    } else {
        tp as f64 / true_edges.len() as f64
    };
    Ok(Evaluation {
        fdr,
        power,
        true_positives: tp,
        false_positives: fp,
        false_negatives: true_edges.len() - tp,
        selected: selected.edges.len(),
        true_edges: true_edges.len(),
    })
}

/// Area under the ROC curve of `scores` for the `labels` (ties count one
/// half). `None` when either class is empty.
pub fn classification_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    // average ranks over ties
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        rank_sum += avg * idx[start..end].iter().filter(|&&k| labels[k]).count() as f64;
        start = end;
    }
    let u = rank_sum - (positives * (positives + 1)) as f64 / 2.0;
    Some(u / (positives * negatives) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainEdgeCounts {
    pub chain: usize,
    pub init: String,
    pub draws: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub chains: Vec<ChainEdgeCounts>,
    /// Largest pairwise `|mean_a - mean_b| / sqrt((var_a + var_b) / 2)` of
    /// the retained edge counts; 0 for a single chain.
    pub overlap: f64,
    pub stats: MoveStats,
    /// Every iteration's `k_G`: `(chain, iteration, k_G)`.
    pub trace: Vec<(usize, usize, usize)>,
}

/// Cross-chain overlap of the retained edge counts.
pub fn edge_count_overlap(a: &[usize], b: &[usize]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let diff = (ma - mb).abs();
    if diff == 0.0 {
        return 0.0;
    }
    let pooled = (0.5 * (va + vb)).sqrt();
    if pooled == 0.0 {
        f64::INFINITY
    } else {
        diff / pooled
    }
}

fn mean_var(xs: &[usize]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

pub fn diagnostics(traces: &[(TraceStore, MoveStats)]) -> Result<Diagnostics> {
    let (first, _) = traces.first().ok_or(Error::EmptyTrace)?;
    let mut stats = MoveStats::new(first.prior_edge_count());
    let mut chains = Vec::new();
    let mut retained = Vec::new();
    let mut trace = Vec::new();
    for (t, s) in traces {
        if t.draws() == 0 {
            return Err(Error::EmptyTrace);
        }
        stats.merge(s);
        let counts = t.retained_edge_counts();
        let (mean, var) = mean_var(&counts);
        chains.push(ChainEdgeCounts {
            chain: t.meta.chain,
            init: t.meta.init.clone(),
            draws: counts.len(),
            mean,
            sd: var.sqrt(),
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
        });
        trace.extend_from_slice(&t.edge_counts);
        retained.push(counts);
    }
    let mut overlap: f64 = 0.0;
    for a in 0..retained.len() {
        for b in a + 1..retained.len() {
            overlap = overlap.max(edge_count_overlap(&retained[a], &retained[b]));
        }
    }
    Ok(Diagnostics {
        chains,
        overlap,
        stats,
        trace,
    })
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# retained edge counts per chain")?;
        writeln!(f, "chain\tinit\tdraws\tmean\tsd\tmin\tmax")?;
        for c in &self.chains {
            writeln!(
                f,
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}",
                c.chain, c.init, c.draws, c.mean, c.sd, c.min, c.max
            )?;
        }
        writeln!(f, "overlap = {:.4}", self.overlap)?;
        writeln!(f)?;
        writeln!(f, "# acceptance rates (all chains)")?;
        write!(f, "{}", self.stats)?;
        writeln!(f)?;
        writeln!(f, "# edge count by iteration")?;
        writeln!(f, "chain\titeration\tk_G")?;
        for &(c, t, k) in &self.trace {
            writeln!(f, "{c}\t{t}\t{k}")?;
        }
        Ok(())
    }
}

impl Diagnostics {
    pub fn acceptance_rate(&self, kernel: Kernel) -> Option<f64> {
        self.stats.counter(kernel).rate()
    }
}

pub fn format_pstar(summary: &PosteriorSummary, gene_ids: &[String], sample_ids: &[String]) -> String {
    let mut out = String::from("gene_id");
    for s in sample_ids {
        out.push('\t');
        out.push_str(s);
    }
    out.push('\n');
    for (i, g) in gene_ids.iter().enumerate() {
        out.push_str(g);
        for v in summary.p_star.row(i) {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn format_edges(summary: &PosteriorSummary, g0: &PriorGraph, gene_ids: &[String]) -> String {
    let mut out = String::from("src\tdst\tv\tbeta_mean\tbeta_mean_given_inclusion\n");
    for (k, e) in g0.edges().enumerate() {
        let cond = summary.beta_mean_given_inclusion[k].map_or_else(|| "NA".to_string(), |b| b.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{cond}\n",
            gene_ids[e.src.0], gene_ids[e.dst.0], summary.v[k], summary.beta_mean[k]
        ));
    }
    out
}

pub fn format_degree_posterior(summary: &PosteriorSummary, gene_ids: &[String]) -> String {
    let mut out = String::from("gene_id\tdegree\tprobability\n");
    for (g, dist) in gene_ids.iter().zip(&summary.degree_posterior) {
        for (d, pr) in dist.iter().enumerate() {
            out.push_str(&format!("{g}\t{d}\t{pr}\n"));
        }
    }
    out
}
