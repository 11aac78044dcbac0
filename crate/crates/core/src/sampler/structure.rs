//! Structural moves: row-wise random-walk Metropolis-Hastings on `B`,
//! reversible-jump birth/death of prior edges, and the inclusion
//! probability `phi`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::state::ChainState;
use crate::model::structural::SINGULAR_RATIO;
use crate::sampler::stats::{Kernel, MoveStats};
use crate::sampler::Model;

/// Change of the structural log-likelihood (all samples) when row `i` of
/// `B` moves by `deltas` with determinant ratio `ratio` and residual row
/// `new_resid`.
fn row_log_likelihood_change(state: &ChainState, i: usize, ratio: f64, new_resid: &[f64]) -> f64 {
    let n = new_resid.len() as f64;
    let old: f64 = state.cache.resid.row(i).iter().map(|e| e * e).sum();
    let new: f64 = new_resid.iter().map(|e| e * e).sum();
    n * ratio.abs().ln() - 0.5 * (new - old) / state.sem.s2[i]
}

/// Residual row `i` after adding `deltas[(k, d)]` to `B[i][k]`.
fn shifted_residual(state: &ChainState, i: usize, deltas: &[(usize, f64)]) -> Vec<f64> {
    let mut out = state.cache.resid.row(i).to_vec();
    for &(k, d) in deltas {
        for (o, &c) in out.iter_mut().zip(state.cache.centered.row(k)) {
            *o += d * c;
        }
    }
    out
}

fn commit_row_change(state: &mut ChainState, i: usize, deltas: &[(usize, f64)], ratio: f64, new_resid: Vec<f64>) {
    state.sem.structure.apply_row_change(i, deltas, ratio);
    state.cache.resid.row_mut(i).copy_from_slice(&new_resid);
}

/// Outcome of a Metropolis-type move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub accepted: bool,
    /// Log acceptance ratio before clipping at zero; `-inf` for a singular
    /// proposal.
    pub log_ratio: f64,
}

/// Random-walk Metropolis-Hastings update of the free coefficients of row
/// `i` (one per parent). The proposal covariance is
/// `c (h_i W'W + I / beta_var)^-1` with `W` the centred parent scores; the
/// acceptance ratio is the exact structural likelihood ratio, including
/// `|det B'|^n / |det B|^n`, times the normal prior ratio. Returns `None`
/// when `i` has no parents.
pub fn update_b_row<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    i: usize,
    scale: f64,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<Option<MoveOutcome>> {
    let parents: Vec<usize> = state.graph.parents_of(i).iter().map(|k| k.0).collect();
    if parents.is_empty() {
        return Ok(None);
    }
    let q = parents.len();
    let n = model.data.samples();
    let beta_var = model.hyper.sem.beta_var;
    let h = 1.0 / state.sem.s2[i];
    let w = DMatrix::from_fn(n, q, |j, a| state.cache.centered[(parents[a], j)]);
    let precision = w.transpose() * &w * h + DMatrix::identity(q, q) / beta_var;
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Invalid(format!("proposal precision of row {i} not PD")))?;
    let noise = DVector::from_fn(q, |_, _| StandardNormal.sample(rng));
    let step = chol
        .l()
        .transpose()
        .solve_upper_triangular(&noise)
        .expect("triangular solve")
        * scale.sqrt();

    let structure = &state.sem.structure;
    let mut log_prior = 0.0;
    let deltas: Vec<(usize, f64)> = parents
        .iter()
        .zip(step.iter())
        .map(|(&k, &s)| {
            let old = structure.beta(i, k);
            let new = old + s;
            log_prior -= (new * new - old * old) / (2.0 * beta_var);
            // B[i][k] = -beta
            (k, -s)
        })
        .collect();
    let ratio = structure.det_ratio(i, &deltas);
    let outcome = if ratio.abs() < SINGULAR_RATIO || !ratio.is_finite() {
        MoveOutcome {
            accepted: false,
            log_ratio: f64::NEG_INFINITY,
        }
    } else {
        let new_resid = shifted_residual(state, i, &deltas);
        let log_ratio = row_log_likelihood_change(state, i, ratio, &new_resid) + log_prior;
        let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
        if accepted {
            commit_row_change(state, i, &deltas, ratio, new_resid);
        }
        MoveOutcome { accepted, log_ratio }
    };
    stats.record(Kernel::BRow, outcome.accepted);
    Ok(Some(outcome))
}

/// Kind of trans-dimensional move proposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOutcome {
    pub edge_index: usize,
    pub kind: JumpKind,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// One reversible-jump move. A prior edge `k -> i` is chosen uniformly; if
/// absent its birth is proposed with `beta_ik ~ N(0, beta_var)` (the prior,
/// so the prior-to-proposal factor cancels), otherwise its death. The birth
/// ratio is `L(B')/L(B) * phi/(1-phi)`; the death ratio is the reciprocal
/// of the birth ratio of the reverse move. Singular proposals are rejected.
pub fn rj_move<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Option<JumpOutcome> {
    let total = model.prior_graph.edge_count();
    if total == 0 {
        return None;
    }
    let index = rng.random_range(0..total);
    let edge = model.prior_graph.edge(index);
    let (k, i) = (edge.src.0, edge.dst.0);
    let log_odds = state.phi.ln() - (-state.phi).ln_1p();
    let (kind, deltas, log_prior_odds) = if state.active[index] {
        // B[i][k] = -beta goes back to zero
        let beta = state.sem.structure.beta(i, k);
        (JumpKind::Death, vec![(k, beta)], -log_odds)
    } else {
        let sd = model.hyper.sem.beta_var.sqrt();
        let u: f64 = Normal::new(0.0, sd).expect("positive sd").sample(rng);
        (JumpKind::Birth, vec![(k, -u)], log_odds)
    };
    let ratio = state.sem.structure.det_ratio(i, &deltas);
    let (accepted, log_ratio) = if ratio.abs() < SINGULAR_RATIO || !ratio.is_finite() {
        (false, f64::NEG_INFINITY)
    } else {
        let new_resid = shifted_residual(state, i, &deltas);
        let log_ratio = row_log_likelihood_change(state, i, ratio, &new_resid) + log_prior_odds;
        let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
        if accepted {
            // a death adds exactly -B[i][k], leaving an exact zero
            commit_row_change(state, i, &deltas, ratio, new_resid);
            state.set_edge(model.prior_graph, index, kind == JumpKind::Birth);
        }
        (accepted, log_ratio)
    };
    match kind {
        JumpKind::Birth => {
            stats.record(Kernel::Birth, accepted);
            stats.edge_births[index].record(accepted);
        }
        JumpKind::Death => {
            stats.record(Kernel::Death, accepted);
            stats.edge_deaths[index].record(accepted);
        }
    }
    Some(JumpOutcome {
        edge_index: index,
        kind,
        accepted,
        log_ratio,
    })
}

/// Smallest distance kept between `phi` and the endpoints of `(0, 1)`.
const PHI_MARGIN: f64 = 1e-12;

/// Conjugate draw `phi ~ Beta(a + k_G, b + K - k_G)`.
pub fn update_phi<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, rng: &mut R) -> f64 {
    let prior = &model.hyper.structure;
    let k = state.edge_count() as f64;
    let total = model.prior_graph.edge_count() as f64;
    let phi: f64 = Beta::new(prior.a_phi + k, prior.b_phi + total - k)
        .expect("positive beta parameters")
        .sample(rng);
    state.phi = phi.clamp(PHI_MARGIN, 1.0 - PHI_MARGIN);
    state.phi
}
