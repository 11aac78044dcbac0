//! MCMC transition kernels and the chain driver.

pub mod chain;
pub mod init;
pub mod latent;
pub mod mixture;
pub mod prior;
pub mod stats;
pub mod structure;
pub mod truncated;

use rand::Rng;

use crate::error::Result;
use crate::graph::PriorGraph;
use crate::model::data::ExpressionDataset;
use crate::model::params::Hyperparameters;
use crate::model::state::ChainState;

pub use chain::{run_chain, InitMode, SamplerConfig};
pub use stats::{Counter, Kernel, MoveStats};

use mixture::Tail;

/// The fixed inputs every kernel conditions on.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub data: &'a ExpressionDataset,
    pub prior_graph: &'a PriorGraph,
    pub hyper: &'a Hyperparameters,
}

impl<'a> Model<'a> {
    pub fn new(data: &'a ExpressionDataset, prior_graph: &'a PriorGraph, hyper: &'a Hyperparameters) -> Self {
        Model {
            data,
            prior_graph,
            hyper,
        }
    }
}

/// Which blocks a sweep updates. Blocks left out stay fixed, which is how
/// the kernels are tested on partial models (for example with the probit
/// scores treated as observed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub mixture: bool,
    pub latent: bool,
    pub coefficients: bool,
    pub precisions: bool,
    pub structure_rows: bool,
    pub jumps: usize,
    pub phi: bool,
    /// Scale `c` of the row-wise proposal covariance.
    pub mh_scale: f64,
}

impl SweepPlan {
    /// Every block, with `jumps` reversible-jump attempts.
    pub fn full(mh_scale: f64, jumps: usize) -> Self {
        SweepPlan {
            mixture: true,
            latent: true,
            coefficients: true,
            precisions: true,
            structure_rows: true,
            jumps,
            phi: true,
            mh_scale,
        }
    }

    /// Only the graph layer (`B`, edges, `phi`); scores are held fixed.
    pub fn structure_only(mh_scale: f64, jumps: usize) -> Self {
        SweepPlan {
            mixture: false,
            latent: false,
            coefficients: false,
            precisions: false,
            ..SweepPlan::full(mh_scale, jumps)
        }
    }
}

/// One sweep in the fixed order: mixture parameters, latent scores,
/// covariate effects, innovation variances, rows of `B`, edge jumps, `phi`.
pub fn sweep<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    plan: &SweepPlan,
    stats: &mut MoveStats,
    rng: &mut R,
) -> Result<()> {
    let (p, n) = (model.data.genes(), model.data.samples());
    if plan.mixture {
        mixture::update_effect_offset(model, state, rng);
        for j in 0..n {
            mixture::update_alpha(model, state, j, rng)?;
        }
        for i in 0..p {
            mixture::update_mu(model, state, i, rng)?;
        }
        for i in 0..p {
            mixture::update_sigma2(model, state, i, rng)?;
        }
        for i in 0..p {
            mixture::update_kappa(model, state, i, Tail::Minus, rng)?;
        }
        for i in 0..p {
            mixture::update_kappa(model, state, i, Tail::Plus, rng)?;
        }
        mixture::center_sample_effects(state);
        stats.record_gibbs(Kernel::EffectOffset, 1);
        stats.record_gibbs(Kernel::Alpha, n as u64);
        for k in [Kernel::Mu, Kernel::Sigma2, Kernel::KappaMinus, Kernel::KappaPlus] {
            stats.record_gibbs(k, p as u64);
        }
    }
    if plan.latent {
        for i in 0..p {
            for j in 0..n {
                latent::update_latent_score(model, state, i, j, rng)?;
            }
        }
        stats.record_gibbs(Kernel::LatentScore, (p * n) as u64);
    }
    if plan.coefficients {
        for i in 0..p {
            latent::update_b_coeffs(model, state, i, rng)?;
        }
        stats.record_gibbs(Kernel::BCoeffs, p as u64);
    }
    if plan.precisions {
        for i in 0..p {
            latent::update_probit_precision(model, state, i, rng);
        }
        stats.record_gibbs(Kernel::ProbitPrecision, p as u64);
    }
    if plan.structure_rows {
        for i in 0..p {
            structure::update_b_row(model, state, i, plan.mh_scale, stats, rng)?;
        }
    }
    for _ in 0..plan.jumps {
        structure::rj_move(model, state, stats, rng);
    }
    if plan.phi {
        structure::update_phi(model, state, rng);
        stats.record_gibbs(Kernel::Phi, 1);
    }
    state.iteration += 1;
    Ok(())
}
