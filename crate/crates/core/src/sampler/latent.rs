//! Updates of the latent score layer: probit scores with their classes,
//! covariate effects and innovation precisions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::model::density::{residual_log_density, ExpressionClass};
use crate::model::state::ChainState;
use crate::sampler::truncated::truncated_normal;
use crate::sampler::Model;
use crate::special::log_norm_interval;

/// Precision `omega_ii` of `z_i` given the rest of its column.
#[inline]
pub(crate) fn conditional_precision(state: &ChainState, i: usize) -> f64 {
    let s2 = &state.sem.s2;
    let mut omega = 1.0 / s2[i];
    for c in state.graph.children_of(i) {
        let bci = state.sem.structure.entry(c.0, i);
        omega += bci * bci / s2[c.0];
    }
    omega
}

/// Mean and variance of `z_ij` given the other scores of sample `j`,
/// computed from the cached structural residuals.
pub fn score_conditional(state: &ChainState, i: usize, j: usize) -> (f64, f64) {
    let s2 = &state.sem.s2;
    let resid = &state.cache.resid;
    let omega = conditional_precision(state, i);
    let mut weighted = resid[(i, j)] / s2[i];
    for c in state.graph.children_of(i) {
        weighted += state.sem.structure.entry(c.0, i) * resid[(c.0, j)] / s2[c.0];
    }
    (state.latent.score(i, j) - weighted / omega, 1.0 / omega)
}

/// Draws `(z_ij, e_ij)` jointly from their exact full conditional: class
/// `c` is chosen with weight `f_c(y_ij - alpha_j - mu_i)` times the
/// conditional normal mass of its score interval, then the score is drawn
/// from the conditional normal truncated to that interval.
pub fn update_latent_score<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<(f64, ExpressionClass)> {
    let (mean, var) = score_conditional(state, i, j);
    let sd = var.sqrt();
    let m = &state.mixture;
    let r = model.data.y()[(i, j)] - m.alpha[j] - m.mu[i];
    let mut logw = [0.0; 3];
    for (w, class) in logw.iter_mut().zip(ExpressionClass::ALL) {
        let (lo, hi) = class.score_interval();
        let lik = residual_log_density(r, class, m.sigma2[i], m.kappa_minus[i], m.kappa_plus[i]);
        *w = if lik == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            lik + log_norm_interval((lo - mean) / sd, (hi - mean) / sd)
        };
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::Invalid(format!("no admissible class for cell ({i}, {j})")));
    }
    let probs = logw.map(|w| (w - max).exp());
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut class = ExpressionClass::Normal;
    for (p, c) in probs.iter().zip(ExpressionClass::ALL) {
        if *p > 0.0 {
            class = c;
            if u < *p {
                break;
            }
            u -= p;
        }
    }
    let (lo, hi) = class.score_interval();
    let z = truncated_normal(rng, mean, var, lo, hi);
    set_score(state, i, j, z);
    Ok((z, class))
}

/// Writes a new score and propagates it into the cached residuals.
pub(crate) fn set_score(state: &mut ChainState, i: usize, j: usize, z: f64) {
    let delta = z - state.latent.score(i, j);
    state.latent.set_score(i, j, z);
    let cache = &mut state.cache;
    cache.centered[(i, j)] += delta;
    cache.resid[(i, j)] += delta;
    for c in state.graph.children_of(i) {
        cache.resid[(c.0, j)] += state.sem.structure.entry(c.0, i) * delta;
    }
}

/// Draws the covariate effects `b_i` from their Gaussian full conditional.
/// `b_i` enters the residual rows of `i` and of its children; with the
/// other rows of `b` fixed this is a conjugate linear regression.
pub fn update_b_coeffs<R: Rng + ?Sized>(
    model: &Model,
    state: &mut ChainState,
    i: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let x = model.data.design();
    let (n, d) = (x.rows(), x.cols());
    let s2 = &state.sem.s2;
    let structure = &state.sem.structure;
    let cache = &state.cache;
    let rows: Vec<usize> = std::iter::once(i)
        .chain(state.graph.children_of(i).iter().map(|c| c.0))
        .collect();

    let omega = conditional_precision(state, i);
    let mut precision = DMatrix::<f64>::identity(d, d) / model.hyper.sem.b_var;
    let mut linear = DVector::<f64>::zeros(d);
    for j in 0..n {
        let xj = x.row(j);
        for a in 0..d {
            for b in 0..d {
                precision[(a, b)] += omega * xj[a] * xj[b];
            }
        }
        let m_ij = cache.mean[(i, j)];
        let mut acc = 0.0;
        for &r in &rows {
            let bri = structure.entry(r, i);
            // residual of row r with the contribution of b_i removed
            let partial = cache.resid[(r, j)] + bri * m_ij;
            acc += bri * partial / s2[r];
        }
        for a in 0..d {
            linear[a] += acc * xj[a];
        }
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Invalid(format!("covariate posterior precision of gene {i} not PD")))?;
    let mean = chol.solve(&linear);
    let noise = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(rng));
    // L^T v = noise gives v ~ N(0, precision^-1)
    let step = chol
        .l()
        .transpose()
        .solve_upper_triangular(&noise)
        .expect("triangular solve");
    let draw: Vec<f64> = (mean + step).iter().copied().collect();

    state.sem.b_coeffs.row_mut(i).copy_from_slice(&draw);
    let cache = &mut state.cache;
    for j in 0..n {
        let new_m: f64 = x.row(j).iter().zip(&draw).map(|(a, b)| a * b).sum();
        let delta = new_m - cache.mean[(i, j)];
        cache.mean[(i, j)] = new_m;
        cache.centered[(i, j)] -= delta;
        for &r in &rows {
            cache.resid[(r, j)] -= state.sem.structure.entry(r, i) * delta;
        }
    }
    Ok(draw)
}

/// Draws the innovation variance `s_i^2` through its precision,
/// `Gamma(n/2 + a_s, b_s + sum_j resid_ij^2 / 2)`.
pub fn update_probit_precision<R: Rng + ?Sized>(model: &Model, state: &mut ChainState, i: usize, rng: &mut R) -> f64 {
    let hyper = &model.hyper.sem;
    let ss: f64 = state.cache.resid.row(i).iter().map(|e| e * e).sum();
    let n = model.data.samples() as f64;
    let shape = 0.5 * n + hyper.s_shape;
    let rate = hyper.s_rate + 0.5 * ss;
    let h: f64 = Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng);
    state.sem.s2[i] = 1.0 / h;
    state.sem.s2[i]
}
