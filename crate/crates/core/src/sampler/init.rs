//! Starting states for a chain.

use rand::Rng;

use crate::error::Result;
use crate::graph::ReciprocalGraph;
use crate::model::density::ExpressionClass;
use crate::model::matrix::RowMatrix;
use crate::model::params::MixtureParams;
use crate::model::state::{ChainState, LatentState, SemParams};
use crate::model::structural::StructuralMatrix;
use crate::sampler::chain::InitMode;
use crate::sampler::truncated::truncated_normal;
use crate::sampler::Model;

/// Cells further than this many row standard deviations from the row mean
/// start in a tail class.
const INITIAL_TAIL_SDS: f64 = 2.0;

/// Builds the initial state. Gene effects start at the row means so that
/// the moment-based initial classes are inside the support of their tails;
/// precisions and inverse tail widths start at their prior means, widened
/// where needed to satisfy the support and `kappa > kappa0 * sigma`
/// constraints. Scores are drawn from `N(0, 1)` truncated to the initial
/// class; `B` has no off-diagonal mass and the graph follows `mode`.
pub fn initial_state<R: Rng + ?Sized>(model: &Model, mode: InitMode, rng: &mut R) -> Result<ChainState> {
    let data = model.data;
    let hyper = model.hyper;
    let (p, n) = (data.genes(), data.samples());
    let y = data.y();
    let mh = &hyper.mixture;

    let mut mu = vec![0.0; p];
    let mut sigma2 = vec![0.0; p];
    let mut kappa_minus = vec![0.0; p];
    let mut kappa_plus = vec![0.0; p];
    let mut scores = RowMatrix::zeros(p, n);
    for i in 0..p {
        let row = y.row(i);
        let mean = row.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        mu[i] = mean;
        sigma2[i] = mh.sigma_rate / mh.sigma_shape;
        let sigma = sigma2[i].sqrt();
        let mut widest_low = 0.0f64;
        let mut widest_high = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            let r = v - mean;
            let class = if sd > 0.0 && r > INITIAL_TAIL_SDS * sd {
                widest_high = widest_high.max(r);
                ExpressionClass::High
            } else if sd > 0.0 && r < -INITIAL_TAIL_SDS * sd {
                widest_low = widest_low.max(-r);
                ExpressionClass::Low
            } else {
                ExpressionClass::Normal
            };
            let (lo, hi) = class.score_interval();
            scores[(i, j)] = truncated_normal(rng, 0.0, 1.0, lo, hi);
        }
        let floor = 1.01 * mh.kappa0 * sigma;
        kappa_minus[i] = (mh.kappa_minus_rate / mh.kappa_minus_shape)
            .max(1.01 * widest_low)
            .max(floor);
        kappa_plus[i] = (mh.kappa_plus_rate / mh.kappa_plus_shape)
            .max(1.01 * widest_high)
            .max(floor);
    }
    let mixture = MixtureParams {
        alpha: vec![0.0; n],
        mu,
        sigma2,
        kappa_minus,
        kappa_plus,
    };
    let sem = SemParams {
        structure: StructuralMatrix::identity(p),
        s2: vec![hyper.sem.s_rate / hyper.sem.s_shape; p],
        b_coeffs: RowMatrix::zeros(p, data.covariates()),
    };
    let g0 = model.prior_graph;
    let graph = match mode {
        InitMode::Full => g0.graph().clone(),
        InitMode::Empty => ReciprocalGraph::empty(p),
        InitMode::Random => {
            let keep: Vec<_> = g0.edges().copied().filter(|_| rng.random::<bool>()).collect();
            ReciprocalGraph::from_edges(p, keep)?
        }
    };
    let a = hyper.structure.a_phi;
    let b = hyper.structure.b_phi;
    let state = ChainState::new(
        data,
        g0,
        mixture,
        sem,
        LatentState::from_scores(scores),
        graph,
        a / (a + b),
    )?;
    state.validate(data, g0, hyper)?;
    Ok(state)
}
