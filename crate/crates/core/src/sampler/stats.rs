use std::fmt;

use serde::{Deserialize, Serialize};

/// Every transition kernel of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    EffectOffset,
    Alpha,
    Mu,
    Sigma2,
    KappaMinus,
    KappaPlus,
    LatentScore,
    BCoeffs,
    ProbitPrecision,
    BRow,
    Birth,
    Death,
    Phi,
}

impl Kernel {
    pub const ALL: [Kernel; 13] = [
        Kernel::EffectOffset,
        Kernel::Alpha,
        Kernel::Mu,
        Kernel::Sigma2,
        Kernel::KappaMinus,
        Kernel::KappaPlus,
        Kernel::LatentScore,
        Kernel::BCoeffs,
        Kernel::ProbitPrecision,
        Kernel::BRow,
        Kernel::Birth,
        Kernel::Death,
        Kernel::Phi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::EffectOffset => "effect_offset",
            Kernel::Alpha => "alpha",
            Kernel::Mu => "mu",
            Kernel::Sigma2 => "sigma2",
            Kernel::KappaMinus => "kappa_minus",
            Kernel::KappaPlus => "kappa_plus",
            Kernel::LatentScore => "latent_score",
            Kernel::BCoeffs => "b_coeffs",
            Kernel::ProbitPrecision => "probit_precision",
            Kernel::BRow => "b_row",
            Kernel::Birth => "birth",
            Kernel::Death => "death",
            Kernel::Phi => "phi",
        }
    }

    pub fn from_name(name: &str) -> Option<Kernel> {
        Kernel::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub proposed: u64,
    pub accepted: u64,
}

impl Counter {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    fn add(&mut self, other: &Counter) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Proposal and acceptance counts per kernel, and birth/death counts per
/// prior edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub kernels: Vec<(Kernel, Counter)>,
    pub edge_births: Vec<Counter>,
    pub edge_deaths: Vec<Counter>,
}

impl MoveStats {
    pub fn new(prior_edges: usize) -> Self {
        MoveStats {
            kernels: Kernel::ALL.iter().map(|&k| (k, Counter::default())).collect(),
            edge_births: vec![Counter::default(); prior_edges],
            edge_deaths: vec![Counter::default(); prior_edges],
        }
    }

    fn slot(&mut self, kernel: Kernel) -> &mut Counter {
        let pos = self
            .kernels
            .iter()
            .position(|(k, _)| *k == kernel)
            .expect("every kernel has a counter");
        &mut self.kernels[pos].1
    }

    pub fn record(&mut self, kernel: Kernel, accepted: bool) {
        self.slot(kernel).record(accepted);
    }

    /// Records `count` always-accepted Gibbs draws.
    pub fn record_gibbs(&mut self, kernel: Kernel, count: u64) {
        let c = self.slot(kernel);
        c.proposed += count;
        c.accepted += count;
    }

    pub fn counter(&self, kernel: Kernel) -> Counter {
        self.kernels
            .iter()
            .find(|(k, _)| *k == kernel)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    pub fn merge(&mut self, other: &MoveStats) {
        for (k, c) in &other.kernels {
            self.slot(*k).add(c);
        }
        for (a, b) in self.edge_births.iter_mut().zip(&other.edge_births) {
            a.add(b);
        }
        for (a, b) in self.edge_deaths.iter_mut().zip(&other.edge_deaths) {
            a.add(b);
        }
    }
}

impl fmt::Display for MoveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>12} {:>12} {:>8}",
            "kernel", "proposed", "accepted", "rate"
        )?;
        for (k, c) in &self.kernels {
            let rate = c.rate().map_or_else(|| "NA".to_string(), |r| format!("{r:.4}"));
            writeln!(f, "{:<18} {:>12} {:>12} {:>8}", k.name(), c.proposed, c.accepted, rate)?;
        }
        Ok(())
    }
}
