//! Synthetic data with a known pathway structure: a sparse structural
//! matrix, matrix-normal latent scores, a two-group design and a
//! three-component Gaussian observation model whose score cuts differ from
//! the analysis model's.

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph};
use crate::model::data::ExpressionDataset;
use crate::model::matrix::RowMatrix;
use crate::model::structural::StructuralMatrix;

/// One Gaussian component of the generating mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: f64,
    pub sd: f64,
}

/// The generating observation model: `low` below `cut_low` (inclusive),
/// `high` above `cut_high`, `normal` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTruth {
    pub low: Component,
    pub normal: Component,
    pub high: Component,
    pub cut_low: f64,
    pub cut_high: f64,
}

impl Default for MixtureTruth {
    fn default() -> Self {
        MixtureTruth {
            low: Component { mean: -4.0, sd: 2.0 },
            normal: Component { mean: 0.0, sd: 1.0 },
            high: Component { mean: 4.0, sd: 2.0 },
            cut_low: -1.0,
            cut_high: 3.0,
        }
    }
}

impl MixtureTruth {
    pub fn class_of(&self, z: f64) -> i8 {
        if z <= self.cut_low {
            -1
        } else if z > self.cut_high {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub p: usize,
    pub n: usize,
    /// Probability that an off-diagonal entry of `B` is zero. When `None`
    /// it is set so that the expected number of true edges is
    /// `target_edges` (default `p`).
    pub pi0: Option<f64>,
    pub target_edges: Option<usize>,
    /// Samples in the first (reference) group; the rest form the second.
    pub group_split: usize,
    pub false_edge_count: usize,
    pub mixture_truth: MixtureTruth,
    /// Prior mean of the covariate effects `(intercept, group)`.
    pub b_mean: [f64; 2],
    pub sigma_b2: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            p: 50,
            n: 30,
            pi0: None,
            target_edges: None,
            group_split: 15,
            false_edge_count: 87,
            mixture_truth: MixtureTruth::default(),
            b_mean: [0.0, 2.0],
            sigma_b2: 0.25,
            seed: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.n < 2 {
            return Err(Error::Invalid(format!(
                "need p >= 2 and n >= 2, got p={} n={}",
                self.p, self.n
            )));
        }
        if self.group_split > self.n {
            return Err(Error::Invalid("group_split exceeds n".into()));
        }
        let pi0 = self.spike_probability();
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::Invalid(format!("pi0 = {pi0} outside [0, 1]")));
        }
        if !(self.sigma_b2 >= 0.0) {
            return Err(Error::Invalid("sigma_b2 must be non-negative".into()));
        }
        let t = &self.mixture_truth;
        if !(t.cut_low < t.cut_high) || [t.low.sd, t.normal.sd, t.high.sd].iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Invalid(
                "mixture truth needs cut_low < cut_high and positive SDs".into(),
            ));
        }
        Ok(())
    }

    pub fn spike_probability(&self) -> f64 {
        match self.pi0 {
            Some(pi0) => pi0,
            None => {
                let pairs = (self.p * (self.p - 1)) as f64;
                let target = self.target_edges.unwrap_or(self.p) as f64;
                1.0 - target / pairs
            }
        }
    }
}

/// Everything the generator drew, kept for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    pub b_true: RowMatrix,
    pub omega: RowMatrix,
    pub e_star: Vec<DirectedEdge>,
    pub e_tilde: Vec<DirectedEdge>,
    pub w: RowMatrix,
    pub z_true: RowMatrix,
    /// Classes under the generating cuts, gene-major.
    pub e_true: Vec<i8>,
    pub b_coeffs: RowMatrix,
}

const MAX_REDRAWS: usize = 1000;

/// Unit-diagonal `B` whose off-diagonal entries are zero with probability
/// `pi0` and otherwise `+-Gamma(2, 1)` with a fair random sign. Singular
/// draws are redrawn.
pub fn gen_structural_truth<R: Rng + ?Sized>(cfg: &SimulationConfig, rng: &mut R) -> Result<RowMatrix> {
    let p = cfg.p;
    let pi0 = cfg.spike_probability();
    let slab = Gamma::new(2.0, 1.0).expect("valid gamma");
    for _ in 0..MAX_REDRAWS {
        let b = RowMatrix::from_fn(p, p, |i, k| {
            if i == k {
                1.0
            } else if rng.random::<f64>() < pi0 {
                0.0
            } else {
                let g: f64 = slab.sample(rng);
                if rng.random::<bool>() {
                    g
                } else {
                    -g
                }
            }
        });
        if StructuralMatrix::from_dense(b.clone()).is_ok() {
            return Ok(b);
        }
    }
    Err(Error::Singular)
}

/// `D^-1/2 B'B D^-1/2` with `D = diag(B'B)`.
pub fn gen_precision(b: &RowMatrix) -> Result<RowMatrix> {
    let m = b.to_dmatrix();
    let btb = m.transpose() * &m;
    if m.clone().lu().determinant().abs() < 1e-300 {
        return Err(Error::Singular);
    }
    let p = btb.nrows();
    let scale: Vec<f64> = (0..p).map(|i| 1.0 / btb[(i, i)].sqrt()).collect();
    Ok(RowMatrix::from_fn(p, p, |i, k| {
        if i == k {
            1.0
        } else {
            btb[(i, k)] * scale[i] * scale[k]
        }
    }))
}

/// Draws a complete dataset and its truth from `cfg.seed`. The prior
/// graph is drawn by [`gen_prior_graph`] from the same stream.
pub fn gen_dataset(cfg: &SimulationConfig) -> Result<(ExpressionDataset, SimulationTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (p, n) = (cfg.p, cfg.n);
    let b_true = gen_structural_truth(cfg, &mut rng)?;
    let omega = gen_precision(&b_true)?;
    let chol = omega.to_dmatrix().cholesky().ok_or_else(|| Error::Numerical {
        iteration: 0,
        message: "simulated precision is not positive definite".into(),
    })?;
    let lt = chol.l().transpose();

    // w_j ~ N(0, Omega^-1):  L' w = xi
    let mut w = RowMatrix::zeros(p, n);
    for j in 0..n {
        let xi = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let col = lt.solve_upper_triangular(&xi).expect("triangular solve");
        for i in 0..p {
            w[(i, j)] = col[i];
        }
    }
    let x = RowMatrix::from_fn(n, 2, |j, c| if c == 0 || j >= cfg.group_split { 1.0 } else { 0.0 });
    let sd_b = cfg.sigma_b2.sqrt();
    let b_coeffs = RowMatrix::from_fn(p, 2, |_, c| cfg.b_mean[c] + sd_b * rng.sample::<f64, _>(StandardNormal));
    let z_true = RowMatrix::from_fn(p, n, |i, j| {
        w[(i, j)] + x.row(j).iter().zip(b_coeffs.row(i)).map(|(a, b)| a * b).sum::<f64>()
    });
    let truth_mix = &cfg.mixture_truth;
    let e_true: Vec<i8> = z_true.as_slice().iter().map(|&z| truth_mix.class_of(z)).collect();
    let y = RowMatrix::from_fn(p, n, |i, j| {
        let c = match e_true[i * n + j] {
            -1 => truth_mix.low,
            1 => truth_mix.high,
            _ => truth_mix.normal,
        };
        Normal::new(c.mean, c.sd).expect("positive sd").sample(&mut rng)
    });
    let e_star: Vec<DirectedEdge> = (0..p)
        .flat_map(|k| (0..p).map(move |i| (k, i)))
        .filter(|&(k, i)| k != i && b_true[(i, k)] != 0.0)
        .map(|(k, i)| DirectedEdge::new(k, i))
        .collect();
    let mut truth = SimulationTruth {
        b_true,
        omega,
        e_star,
        e_tilde: Vec::new(),
        w,
        z_true,
        e_true,
        b_coeffs,
    };
    truth.e_tilde = draw_false_edges(&truth, cfg.false_edge_count, &mut rng)?;
    let gene_ids = (1..=p).map(|i| format!("gene{i}")).collect();
    let sample_ids = (1..=n).map(|j| format!("s{j}")).collect();
    let data = ExpressionDataset::new(y, x, gene_ids, sample_ids)?;
    Ok((data, truth))
}

fn draw_false_edges<R: Rng + ?Sized>(truth: &SimulationTruth, count: usize, rng: &mut R) -> Result<Vec<DirectedEdge>> {
    let p = truth.b_true.rows();
    let candidates: Vec<DirectedEdge> = (0..p)
        .flat_map(|k| (0..p).map(move |i| (k, i)))
        .filter(|&(k, i)| k != i && truth.b_true[(i, k)] == 0.0)
        .map(|(k, i)| DirectedEdge::new(k, i))
        .collect();
    if count > candidates.len() {
        return Err(Error::Invalid(format!(
            "{count} false edges requested but only {} non-edges exist",
            candidates.len()
        )));
    }
    let mut picked: Vec<usize> = sample_indices(rng, candidates.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| candidates[k]).collect())
}

/// The prior graph `E* u E~`, edges ordered by (src, dst), with a flag per
/// edge telling whether it is false (in `E~`).
pub fn gen_prior_graph(truth: &SimulationTruth) -> Result<(PriorGraph, Vec<bool>)> {
    let mut edges: Vec<(DirectedEdge, bool)> = truth
        .e_star
        .iter()
        .map(|&e| (e, false))
        .chain(truth.e_tilde.iter().map(|&e| (e, true)))
        .collect();
    edges.sort_by_key(|(e, _)| (e.src, e.dst));
    let g0 = PriorGraph::from_edges(truth.b_true.rows(), edges.iter().map(|(e, _)| *e))?;
    Ok((g0, edges.into_iter().map(|(_, f)| f).collect()))
}

/// One prior edge in the truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEdge {
    pub src: String,
    pub dst: String,
    pub true_edge: bool,
    /// `B_true[dst][src]` (0 for false edges).
    pub b_true: f64,
}

/// The serialized form of a simulation's truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub edges: Vec<TruthEdge>,
    pub b_true: Vec<Vec<f64>>,
    pub e_true: Vec<Vec<i8>>,
    pub b_coeffs: Vec<Vec<f64>>,
}

impl TruthFile {
    pub fn new(cfg: &SimulationConfig, data: &ExpressionDataset, truth: &SimulationTruth, g0: &PriorGraph) -> Self {
        let genes = data.gene_ids();
        let n = data.samples();
        let edges = g0
            .edges()
            .map(|e| {
                let b = truth.b_true[(e.dst.0, e.src.0)];
                TruthEdge {
                    src: genes[e.src.0].clone(),
                    dst: genes[e.dst.0].clone(),
                    true_edge: b != 0.0,
                    b_true: b,
                }
            })
            .collect();
        let rows = |m: &RowMatrix| (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        TruthFile {
            seed: cfg.seed,
            gene_ids: genes.to_vec(),
            sample_ids: data.sample_ids().to_vec(),
            edges,
            b_true: rows(&truth.b_true),
            e_true: truth.e_true.chunks(n).map(|c| c.to_vec()).collect(),
            b_coeffs: rows(&truth.b_coeffs),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let t: TruthFile = serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))?;
        let p = t.gene_ids.len();
        let n = t.sample_ids.len();
        let square = t.b_true.len() == p && t.b_true.iter().all(|r| r.len() == p);
        let classes = t.e_true.len() == p
            && t.e_true
                .iter()
                .all(|r| r.len() == n && r.iter().all(|c| (-1..=1).contains(c)));
        if !square || !classes {
            return Err(Error::parse(
                source,
                0,
                "truth matrices do not match the gene and sample lists",
            ));
        }
        for e in &t.edges {
            if !t.gene_ids.contains(&e.src) || !t.gene_ids.contains(&e.dst) {
                return Err(Error::parse(
                    source,
                    0,
                    format!("edge {} -> {} names an unknown gene", e.src, e.dst),
                ));
            }
        }
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth serializes")
    }

    /// True edges as `(src, dst)` node indices.
    pub fn true_edges(&self) -> Vec<DirectedEdge> {
        let p = self.gene_ids.len();
        (0..p)
            .flat_map(|k| (0..p).map(move |i| (k, i)))
            .filter(|&(k, i)| k != i && self.b_true[i][k] != 0.0)
            .map(|(k, i)| DirectedEdge::new(k, i))
            .collect()
    }
}
