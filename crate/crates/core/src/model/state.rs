use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph, ReciprocalGraph};
use crate::model::data::ExpressionDataset;
use crate::model::density::{dot, indicator_from_score, mixture_log_density, ExpressionClass};
use crate::model::matrix::RowMatrix;
use crate::model::params::{Hyperparameters, MixtureParams};
use crate::model::structural::StructuralMatrix;

/// Probit scores and the classes they imply. `classes` is always the
/// image of `scores` under [`indicator_from_score`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    scores: RowMatrix,
    classes: Vec<ExpressionClass>,
}

impl LatentState {
    pub fn from_scores(scores: RowMatrix) -> Self {
        let classes = scores.as_slice().iter().map(|&z| indicator_from_score(z)).collect();
        LatentState { scores, classes }
    }

    pub fn scores(&self) -> &RowMatrix {
        &self.scores
    }

    #[inline]
    pub fn score(&self, i: usize, j: usize) -> f64 {
        self.scores[(i, j)]
    }

    #[inline]
    pub fn class(&self, i: usize, j: usize) -> ExpressionClass {
        self.classes[i * self.scores.cols() + j]
    }

    pub fn classes(&self) -> &[ExpressionClass] {
        &self.classes
    }

    /// Sets one score and re-derives its class.
    #[inline]
    pub fn set_score(&mut self, i: usize, j: usize, z: f64) {
        let n = self.scores.cols();
        self.scores[(i, j)] = z;
        self.classes[i * n + j] = indicator_from_score(z);
    }

    pub fn is_consistent(&self) -> bool {
        self.scores
            .as_slice()
            .iter()
            .zip(&self.classes)
            .all(|(&z, &e)| indicator_from_score(z) == e)
    }
}

/// Structural-equation parameters: `B`, innovation variances `s2` and
/// covariate effects (`p x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct SemParams {
    pub structure: StructuralMatrix,
    pub s2: Vec<f64>,
    pub b_coeffs: RowMatrix,
}

/// Derived matrices the kernels keep current: the mean surface `M`, the
/// centred scores `Z - M` and the structural residuals `B (Z - M)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ScoreCache {
    pub mean: RowMatrix,
    pub centered: RowMatrix,
    pub resid: RowMatrix,
}

impl ScoreCache {
    fn build(design: &RowMatrix, sem: &SemParams, latent: &LatentState) -> Self {
        let (p, n) = (latent.scores.rows(), latent.scores.cols());
        let mean = RowMatrix::from_fn(p, n, |i, j| dot(design.row(j), sem.b_coeffs.row(i)));
        let centered = RowMatrix::from_fn(p, n, |i, j| latent.score(i, j) - mean[(i, j)]);
        let mut resid = RowMatrix::zeros(p, n);
        for i in 0..p {
            for k in 0..p {
                let bik = sem.structure.entry(i, k);
                if bik != 0.0 {
                    for j in 0..n {
                        resid[(i, j)] += bik * centered[(k, j)];
                    }
                }
            }
        }
        ScoreCache { mean, centered, resid }
    }
}

/// The complete set of unknowns at one iteration.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub mixture: MixtureParams,
    pub sem: SemParams,
    pub latent: LatentState,
    pub graph: ReciprocalGraph,
    /// Inclusion flag for every prior edge, indexed like the prior graph.
    pub active: Vec<bool>,
    /// Common edge-inclusion probability.
    pub phi: f64,
    pub iteration: usize,
    pub(crate) cache: ScoreCache,
}

impl ChainState {
    pub fn new(
        data: &ExpressionDataset,
        g0: &PriorGraph,
        mixture: MixtureParams,
        sem: SemParams,
        latent: LatentState,
        graph: ReciprocalGraph,
        phi: f64,
    ) -> Result<Self> {
        let (p, n) = (data.genes(), data.samples());
        if mixture.alpha.len() != n
            || mixture.mu.len() != p
            || mixture.sigma2.len() != p
            || mixture.kappa_minus.len() != p
            || mixture.kappa_plus.len() != p
        {
            return Err(Error::Dimension("mixture parameter lengths".into()));
        }
        if sem.structure.dim() != p
            || sem.s2.len() != p
            || sem.b_coeffs.rows() != p
            || sem.b_coeffs.cols() != data.covariates()
        {
            return Err(Error::Dimension("structural parameter shapes".into()));
        }
        if latent.scores.rows() != p || latent.scores.cols() != n {
            return Err(Error::Dimension("latent score shape".into()));
        }
        if !graph.is_subgraph(g0)? {
            return Err(Error::Invalid("graph is not an edge subset of the prior graph".into()));
        }
        let active = g0.edges().map(|e| graph.contains(e)).collect();
        let cache = ScoreCache::build(data.design(), &sem, &latent);
        Ok(ChainState {
            mixture,
            sem,
            latent,
            graph,
            active,
            phi,
            iteration: 0,
            cache,
        })
    }

    /// Recomputes the derived score matrices after direct edits of the
    /// public fields.
    pub fn refresh_cache(&mut self, data: &ExpressionDataset) {
        self.cache = ScoreCache::build(data.design(), &self.sem, &self.latent);
    }

    /// `k_G`, the number of included edges.
    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn mean_surface(&self) -> &RowMatrix {
        &self.cache.mean
    }

    /// Structural residuals `B (Z - M)`.
    pub fn residuals(&self) -> &RowMatrix {
        &self.cache.resid
    }

    pub(crate) fn set_edge(&mut self, g0: &PriorGraph, index: usize, included: bool) {
        let e: DirectedEdge = g0.edge(index);
        if included {
            self.graph.insert(e).expect("prior edge is valid");
        } else {
            self.graph.remove(&e);
        }
        self.active[index] = included;
    }

    /// Checks every structural invariant of a valid chain state.
    pub fn validate(&self, data: &ExpressionDataset, g0: &PriorGraph, hyper: &Hyperparameters) -> Result<()> {
        let (p, n) = (data.genes(), data.samples());
        self.mixture.validate(hyper.mixture.kappa0)?;
        if !self.graph.is_subgraph(g0)? {
            return Err(Error::Invalid("graph left the prior model space".into()));
        }
        for (idx, e) in g0.edges().enumerate() {
            if self.active[idx] != self.graph.contains(e) {
                return Err(Error::Invalid(format!("inclusion flag of edge {idx} out of sync")));
            }
        }
        for i in 0..p {
            for k in 0..p {
                if i != k && self.sem.structure.entry(i, k) != 0.0 && !self.graph.contains(&DirectedEdge::new(k, i)) {
                    return Err(Error::Invalid(format!(
                        "coefficient beta[{i}][{k}] is nonzero without edge {k} -> {i}"
                    )));
                }
            }
        }
        if !self.latent.is_consistent() {
            return Err(Error::Invalid("classes disagree with probit scores".into()));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::Invalid(format!(
                "inclusion probability {} outside (0, 1)",
                self.phi
            )));
        }
        let m = &self.mixture;
        for i in 0..p {
            for j in 0..n {
                let ld = mixture_log_density(
                    data.y()[(i, j)],
                    self.latent.class(i, j),
                    m.alpha[j],
                    m.mu[i],
                    m.sigma2[i],
                    m.kappa_minus[i],
                    m.kappa_plus[i],
                );
                if !ld.is_finite() {
                    return Err(Error::Invalid(format!(
                        "observation ({i}, {j}) lies outside the support of its class"
                    )));
                }
            }
        }
        if self.sem.s2.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Invalid("non-positive innovation variance".into()));
        }
        if !self.sem.structure.log_abs_det().is_finite() {
            return Err(Error::Singular);
        }
        let fresh = ScoreCache::build(data.design(), &self.sem, &self.latent);
        let tol = 1e-8;
        let close = |a: &RowMatrix, b: &RowMatrix| {
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
        };
        if !close(&fresh.mean, &self.cache.mean)
            || !close(&fresh.centered, &self.cache.centered)
            || !close(&fresh.resid, &self.cache.resid)
        {
            return Err(Error::Invalid("cached score matrices drifted".into()));
        }
        Ok(())
    }
}
