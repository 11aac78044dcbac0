//! Forward simulation from the joint prior and from the observation model.
//! Used for joint-distribution (Geweke) tests of the sampler.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::ReciprocalGraph;
use crate::model::density::ExpressionClass;
use crate::model::matrix::RowMatrix;
use crate::model::params::MixtureParams;
use crate::model::state::{ChainState, LatentState, SemParams};
use crate::model::structural::StructuralMatrix;
use crate::sampler::Model;

/// Rejection attempts allowed for one constrained draw.
const MAX_ATTEMPTS: usize = 100_000;

fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng)
}

/// Draws every unknown from the prior. The dimensions, the design and the
/// prior graph come from `model`; the observed values in `model.data` are
/// ignored.
pub fn sample_prior_state<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Result<ChainState> {
    let data = model.data;
    let hyper = model.hyper;
    let g0 = model.prior_graph;
    let (p, n, d) = (data.genes(), data.samples(), data.covariates());
    let mh = &hyper.mixture;
    let sh = &hyper.sem;

    let phi: f64 = Beta::new(hyper.structure.a_phi, hyper.structure.b_phi)
        .expect("positive beta parameters")
        .sample(rng);
    let phi = phi.clamp(1e-12, 1.0 - 1e-12);
    let beta_law = Normal::new(0.0, sh.beta_var.sqrt()).expect("positive sd");
    let mut structure = None;
    let mut graph = ReciprocalGraph::empty(p);
    for _ in 0..MAX_ATTEMPTS {
        let mut dense = RowMatrix::from_fn(p, p, |i, k| if i == k { 1.0 } else { 0.0 });
        let mut edges = Vec::new();
        for e in g0.edges() {
            if rng.random::<f64>() < phi {
                dense.row_mut(e.dst.0)[e.src.0] = -beta_law.sample(rng);
                edges.push(*e);
            }
        }
        if let Ok(s) = StructuralMatrix::from_dense(dense) {
            structure = Some(s);
            graph = ReciprocalGraph::from_edges(p, edges)?;
            break;
        }
    }
    let structure = structure.ok_or(Error::Singular)?;

    let s2: Vec<f64> = (0..p).map(|_| 1.0 / gamma(rng, sh.s_shape, sh.s_rate)).collect();
    let b_law = Normal::new(0.0, sh.b_var.sqrt()).expect("positive sd");
    let b_coeffs = RowMatrix::from_fn(p, d, |_, _| b_law.sample(rng));

    // Z_j = M_j + B^-1 (s * xi_j)
    let inv = structure.inverse();
    let x = data.design();
    let mut scores = RowMatrix::zeros(p, n);
    for j in 0..n {
        let eps: Vec<f64> = (0..p)
            .map(|i| s2[i].sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for i in 0..p {
            let mean: f64 = x.row(j).iter().zip(b_coeffs.row(i)).map(|(a, b)| a * b).sum();
            let noise: f64 = inv.row(i).iter().zip(&eps).map(|(a, b)| a * b).sum();
            scores[(i, j)] = mean + noise;
        }
    }

    let mu_law = Normal::new(mh.mu_mean, mh.mu_var.sqrt()).expect("positive sd");
    let alpha_law = Normal::new(0.0, mh.alpha_var.sqrt()).expect("positive sd");
    let mut alpha: Vec<f64> = (0..n).map(|_| alpha_law.sample(rng)).collect();
    let mut mu: Vec<f64> = (0..p).map(|_| mu_law.sample(rng)).collect();
    let mean = alpha.iter().sum::<f64>() / n as f64;
    alpha.iter_mut().for_each(|a| *a -= mean);
    mu.iter_mut().for_each(|m| *m += mean);

    let mut sigma2 = vec![0.0; p];
    let mut kappa_minus = vec![0.0; p];
    let mut kappa_plus = vec![0.0; p];
    for i in 0..p {
        let mut found = false;
        for _ in 0..MAX_ATTEMPTS {
            let h = gamma(rng, mh.sigma_shape, mh.sigma_rate);
            let nm = gamma(rng, mh.kappa_minus_shape, mh.kappa_minus_rate);
            let np = gamma(rng, mh.kappa_plus_shape, mh.kappa_plus_rate);
            // min(kappa-, kappa+) > kappa0 * sigma
            let cap = h.sqrt() / mh.kappa0;
            if nm < cap && np < cap {
                sigma2[i] = 1.0 / h;
                kappa_minus[i] = 1.0 / nm;
                kappa_plus[i] = 1.0 / np;
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Invalid(
                "prior on (sigma2, kappa) puts almost no mass on kappa > kappa0 * sigma".into(),
            ));
        }
    }
    let mixture = MixtureParams {
        alpha,
        mu,
        sigma2,
        kappa_minus,
        kappa_plus,
    };
    let sem = SemParams {
        structure,
        s2,
        b_coeffs,
    };
    ChainState::new(data, g0, mixture, sem, LatentState::from_scores(scores), graph, phi)
}

/// Draws an expression matrix from the mixture given the classes and
/// parameters of `state`.
pub fn sample_observations<R: Rng + ?Sized>(state: &ChainState, rng: &mut R) -> RowMatrix {
    let m = &state.mixture;
    let (p, n) = (m.mu.len(), m.alpha.len());
    RowMatrix::from_fn(p, n, |i, j| {
        let loc = m.alpha[j] + m.mu[i];
        match state.latent.class(i, j) {
            ExpressionClass::Normal => loc + m.sigma2[i].sqrt() * rng.sample::<f64, _>(StandardNormal),
            // (0, kappa+]
            ExpressionClass::High => loc + m.kappa_plus[i] * (1.0 - rng.random::<f64>()),
            // (-kappa-, 0]
            ExpressionClass::Low => loc - m.kappa_minus[i] * rng.random::<f64>(),
        }
    })
}
