#![allow(dead_code)]

use deppoe::graph::{DirectedEdge, PriorGraph, ReciprocalGraph};
use deppoe::model::{
    ChainState, ExpressionDataset, Hyperparameters, LatentState, MixtureParams, RowMatrix, SemParams, StructuralMatrix,
};
use deppoe::sampler::Model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub data: ExpressionDataset,
    pub g0: PriorGraph,
    pub hyper: Hyperparameters,
    pub state: ChainState,
}

impl Fixture {
    pub fn model(&self) -> Model<'_> {
        Model::new(&self.data, &self.g0, &self.hyper)
    }

    /// Rebuilds the state caches after direct edits of public fields.
    pub fn refresh(&mut self) {
        self.state.refresh_cache(&self.data);
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

pub fn structure(p: usize, betas: &[(usize, usize, f64)]) -> StructuralMatrix {
    let mut dense = RowMatrix::from_fn(p, p, |i, k| if i == k { 1.0 } else { 0.0 });
    for &(src, dst, beta) in betas {
        dense.row_mut(dst)[src] = -beta;
    }
    StructuralMatrix::from_dense(dense).unwrap()
}

/// Everything needed to assemble a state by hand. `betas` lists the
/// included edges `(src, dst, beta)`; `e0` the prior graph.
pub struct Setup {
    pub y: RowMatrix,
    pub x: RowMatrix,
    pub z: RowMatrix,
    pub mixture: MixtureParams,
    pub e0: Vec<(usize, usize)>,
    pub betas: Vec<(usize, usize, f64)>,
    pub s2: Vec<f64>,
    pub b_coeffs: RowMatrix,
    pub hyper: Hyperparameters,
}

impl Setup {
    /// Scores treated as observed: intercept-only design, zero means and
    /// a mixture layer that is never consulted.
    pub fn scores(z: RowMatrix) -> Self {
        let (p, n) = (z.rows(), z.cols());
        Setup {
            y: RowMatrix::zeros(p, n),
            x: RowMatrix::from_fn(n, 1, |_, _| 1.0),
            z,
            mixture: MixtureParams {
                alpha: vec![0.0; n],
                mu: vec![0.0; p],
                sigma2: vec![1.0; p],
                kappa_minus: vec![10.0; p],
                kappa_plus: vec![10.0; p],
            },
            e0: Vec::new(),
            betas: Vec::new(),
            s2: vec![1.0; p],
            b_coeffs: RowMatrix::zeros(p, 1),
            hyper: Hyperparameters::default(),
        }
    }

    pub fn build(self) -> Fixture {
        let (p, n) = (self.y.rows(), self.y.cols());
        let data = ExpressionDataset::new(self.y, self.x, ids("g", p), ids("s", n)).unwrap();
        let g0 = PriorGraph::from_edges(p, self.e0.iter().map(|&(s, d)| DirectedEdge::new(s, d))).unwrap();
        let graph =
            ReciprocalGraph::from_edges(p, self.betas.iter().map(|&(s, d, _)| DirectedEdge::new(s, d))).unwrap();
        let sem = SemParams {
            structure: structure(p, &self.betas),
            s2: self.s2,
            b_coeffs: self.b_coeffs,
        };
        let state = ChainState::new(
            &data,
            &g0,
            self.mixture,
            sem,
            LatentState::from_scores(self.z),
            graph,
            0.5,
        )
        .unwrap();
        Fixture {
            data,
            g0,
            hyper: self.hyper,
            state,
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Asserts that the sample mean of iid draws is within `k` standard errors
/// of `expected`.
pub fn assert_mean(xs: &[f64], expected: f64, k: f64, what: &str) {
    let se = (variance(xs) / xs.len() as f64).sqrt();
    let m = mean(xs);
    assert!(
        (m - expected).abs() < k * se + 1e-12,
        "{what}: mean {m} vs {expected} (se {se})"
    );
}
