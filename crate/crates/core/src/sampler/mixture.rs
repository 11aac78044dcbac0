//! Gibbs updates of the observation-mixture parameters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::density::ExpressionClass;
use crate::model::state::ChainState;
use crate::sampler::truncated::{truncated_gamma, truncated_normal};
use crate::sampler::Model;

/// Support bounds that the classes of one row or column impose on a
/// location parameter `t` entering every residual as `base - t`.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: f64,
    hi: f64,
}

impl Bounds {
    fn new() -> Self {
        Bounds {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// A high cell needs `0 < base - t <= kappa_plus`, a low cell
    /// `-kappa_minus < base - t <= 0`.
    #[inline]
    fn tighten(&mut self, class: ExpressionClass, base: f64, kappa_minus: f64, kappa_plus: f64) {
        match class {
            ExpressionClass::High => {
                self.lo = self.lo.max(base - kappa_plus);
                self.hi = self.hi.min(base);
            }
            ExpressionClass::Low => {
                self.lo = self.lo.max(base);
                self.hi = self.hi.min(base + kappa_minus);
            }
            ExpressionClass::Normal => {}
        }
    }
}

fn empty_support(what: &str, b: Bounds) -> Error {
    Error::Invalid(format!("empty support for {what}: ({}, {})", b.lo, b.hi))
}

/// Draws the sample effect `alpha_j` from its full conditional, a normal
/// truncated to the range that keeps every tail cell of sample `j` inside
/// its uniform support. Does not re-centre; see [`center_sample_effects`].
pub fn update_alpha<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, j: usize, rng: &mut R) -> Result<f64> {
    let y = model.data.y();
    let m = &state.mixture;
    let mut precision = 1.0 / model.hyper.mixture.alpha_var;
    let mut linear = 0.0;
    let mut bounds = Bounds::new();
    for i in 0..model.data.genes() {
        let base = y[(i, j)] - m.mu[i];
        let class = state.latent.class(i, j);
        if class == ExpressionClass::Normal {
            let h = 1.0 / m.sigma2[i];
            precision += h;
            linear += h * base;
        } else {
            bounds.tighten(class, base, m.kappa_minus[i], m.kappa_plus[i]);
        }
    }
    if !(bounds.lo < bounds.hi) {
        return Err(empty_support(&format!("alpha[{j}]"), bounds));
    }
    let var = 1.0 / precision;
    let draw = truncated_normal(rng, var * linear, var, bounds.lo, bounds.hi);
    state.mixture.alpha[j] = draw;
    Ok(draw)
}

/// Draws the gene effect `mu_i` from its truncated-normal full conditional.
pub fn update_mu<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, i: usize, rng: &mut R) -> Result<f64> {
    let hyper = &model.hyper.mixture;
    let y = model.data.y().row(i);
    let m = &state.mixture;
    let h = 1.0 / m.sigma2[i];
    let mut precision = 1.0 / hyper.mu_var;
    let mut linear = hyper.mu_mean / hyper.mu_var;
    let mut bounds = Bounds::new();
    for (j, &yij) in y.iter().enumerate() {
        let base = yij - m.alpha[j];
        let class = state.latent.class(i, j);
        if class == ExpressionClass::Normal {
            precision += h;
            linear += h * base;
        } else {
            bounds.tighten(class, base, m.kappa_minus[i], m.kappa_plus[i]);
        }
    }
    if !(bounds.lo < bounds.hi) {
        return Err(empty_support(&format!("mu[{i}]"), bounds));
    }
    let var = 1.0 / precision;
    let draw = truncated_normal(rng, var * linear, var, bounds.lo, bounds.hi);
    state.mixture.mu[i] = draw;
    Ok(draw)
}

/// Draws `sigma2_i` through its precision `h = 1/sigma2_i`, a gamma
/// truncated to `h >= (kappa0 / min(kappa-, kappa+))^2`.
pub fn update_sigma2<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, i: usize, rng: &mut R) -> Result<f64> {
    let hyper = &model.hyper.mixture;
    let y = model.data.y().row(i);
    let m = &state.mixture;
    let mut count = 0usize;
    let mut ss = 0.0;
    for (j, &yij) in y.iter().enumerate() {
        if state.latent.class(i, j) == ExpressionClass::Normal {
            let r = yij - m.alpha[j] - m.mu[i];
            count += 1;
            ss += r * r;
        }
    }
    let shape = hyper.sigma_shape + 0.5 * count as f64;
    let rate = hyper.sigma_rate + 0.5 * ss;
    let floor = (hyper.kappa0 / m.kappa_minus[i].min(m.kappa_plus[i])).powi(2);
    let h = truncated_gamma(rng, shape, rate, floor, f64::INFINITY);
    let sigma2 = 1.0 / h;
    state.mixture.sigma2[i] = sigma2;
    Ok(sigma2)
}

/// Which uniform tail a width parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Minus,
    Plus,
}

/// Draws a tail width through `nu = 1/kappa`: a gamma with one extra unit
/// of shape per tail cell, truncated so that every tail residual stays in
/// support (`kappa >= |r|`) and `kappa > kappa0 * sigma`.
pub fn update_kappa<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    i: usize,
    tail: Tail,
    rng: &mut R,
) -> Result<f64> {
    let hyper = &model.hyper.mixture;
    let (class, shape0, rate) = match tail {
        Tail::Minus => (ExpressionClass::Low, hyper.kappa_minus_shape, hyper.kappa_minus_rate),
        Tail::Plus => (ExpressionClass::High, hyper.kappa_plus_shape, hyper.kappa_plus_rate),
    };
    let y = model.data.y().row(i);
    let m = &state.mixture;
    let mut count = 0usize;
    let mut widest = 0.0f64;
    for (j, &yij) in y.iter().enumerate() {
        if state.latent.class(i, j) == class {
            count += 1;
            widest = widest.max((yij - m.alpha[j] - m.mu[i]).abs());
        }
    }
    let mut cap = 1.0 / (hyper.kappa0 * m.sigma2[i].sqrt());
    if widest > 0.0 {
        cap = cap.min(1.0 / widest);
    }
    if !(cap > 0.0) {
        return Err(Error::Invalid(format!("empty support for tail width of gene {i}")));
    }
    let nu = truncated_gamma(rng, shape0 + count as f64, rate, 0.0, cap);
    let kappa = 1.0 / nu;
    match tail {
        Tail::Minus => state.mixture.kappa_minus[i] = kappa,
        Tail::Plus => state.mixture.kappa_plus[i] = kappa,
    }
    Ok(kappa)
}

/// Exact Gibbs draw along the direction `(alpha + t, mu - t)`, which leaves
/// every residual `y - alpha - mu` unchanged; only the two normal priors
/// depend on `t`.
pub fn update_effect_offset<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, rng: &mut R) -> f64 {
    let hyper = &model.hyper.mixture;
    let m = &mut state.mixture;
    let precision = m.alpha.len() as f64 / hyper.alpha_var + m.mu.len() as f64 / hyper.mu_var;
    let linear = -m.alpha.iter().sum::<f64>() / hyper.alpha_var
        + m.mu.iter().map(|mu| mu - hyper.mu_mean).sum::<f64>() / hyper.mu_var;
    let z: f64 = StandardNormal.sample(rng);
    let t = linear / precision + z / precision.sqrt();
    m.alpha.iter_mut().for_each(|a| *a += t);
    m.mu.iter_mut().for_each(|mu| *mu -= t);
    t
}

/// Subtracts the mean sample effect from every `alpha_j` and adds it to
/// every `mu_i`. Residuals are unchanged.
pub fn center_sample_effects(state: &mut ChainState) {
    let m = &mut state.mixture;
    let mean = m.alpha.iter().sum::<f64>() / m.alpha.len() as f64;
    m.alpha.iter_mut().for_each(|a| *a -= mean);
    m.mu.iter_mut().for_each(|mu| *mu += mean);
}
