use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::StructurePriorParams;

/// Parameters of the uniform-normal-uniform mixture: sample effects
/// `alpha`, gene effects `mu`, the normal-component variances `sigma2` and
/// the tail widths `kappa_minus`, `kappa_plus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub kappa_minus: Vec<f64>,
    pub kappa_plus: Vec<f64>,
}

impl MixtureParams {
    /// Checks the sum-to-zero constraint on `alpha` and the tail-width
    /// constraint `min(kappa-, kappa+) > kappa0 * sigma` for every gene.
    pub fn validate(&self, kappa0: f64) -> Result<()> {
        let n = self.alpha.len() as f64;
        let sum: f64 = self.alpha.iter().sum();
        let scale = self.alpha.iter().map(|a| a.abs()).fold(1.0, f64::max);
        if sum.abs() > 1e-9 * n * scale {
            return Err(Error::Invalid(format!("sample effects sum to {sum}, not 0")));
        }
        for i in 0..self.mu.len() {
            let sigma = self.sigma2[i].sqrt();
            let kmin = self.kappa_minus[i].min(self.kappa_plus[i]);
            if !(self.sigma2[i] > 0.0) || !(kmin > kappa0 * sigma) {
                return Err(Error::Invalid(format!(
                    "gene {i}: tail widths ({}, {}) must exceed {kappa0} * sigma = {}",
                    self.kappa_minus[i],
                    self.kappa_plus[i],
                    kappa0 * sigma
                )));
            }
        }
        Ok(())
    }
}

/// Priors of the mixture layer. Gamma laws are shape/rate, on precisions
/// (`1/sigma2`) and inverse tail widths (`1/kappa`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureHyperParams {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub sigma_shape: f64,
    pub sigma_rate: f64,
    pub kappa_minus_shape: f64,
    pub kappa_minus_rate: f64,
    pub kappa_plus_shape: f64,
    pub kappa_plus_rate: f64,
    pub alpha_var: f64,
    pub kappa0: f64,
}

impl Default for MixtureHyperParams {
    fn default() -> Self {
        MixtureHyperParams {
            mu_mean: 0.0,
            mu_var: 1.0,
            sigma_shape: 2.0,
            sigma_rate: 2.0,
            kappa_minus_shape: 2.0,
            kappa_minus_rate: 20.0,
            kappa_plus_shape: 2.0,
            kappa_plus_rate: 20.0,
            alpha_var: 1.0,
            kappa0: 5.0,
        }
    }
}

/// Priors of the structural-equation layer: `beta ~ N(0, beta_var)` on
/// included edges, `b_i ~ N(0, b_var I)`, `1/s_i^2 ~ Gamma(s_shape, s_rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemHyperParams {
    pub beta_var: f64,
    pub b_var: f64,
    pub s_shape: f64,
    pub s_rate: f64,
}

impl Default for SemHyperParams {
    fn default() -> Self {
        SemHyperParams {
            beta_var: 1.0,
            b_var: 100.0,
            s_shape: 2.0,
            s_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub mixture: MixtureHyperParams,
    pub sem: SemHyperParams,
    pub structure: StructurePriorParams,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let m = &self.mixture;
        let s = &self.sem;
        let positive = [
            ("mu_var", m.mu_var),
            ("sigma_shape", m.sigma_shape),
            ("sigma_rate", m.sigma_rate),
            ("kappa_minus_shape", m.kappa_minus_shape),
            ("kappa_minus_rate", m.kappa_minus_rate),
            ("kappa_plus_shape", m.kappa_plus_shape),
            ("kappa_plus_rate", m.kappa_plus_rate),
            ("alpha_var", m.alpha_var),
            ("kappa0", m.kappa0),
            ("beta_var", s.beta_var),
            ("b_var", s.b_var),
            ("s_shape", s.s_shape),
            ("s_rate", s.s_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "hyperparameter {name} must be positive, got {v}"
                )));
            }
        }
        if !m.mu_mean.is_finite() {
            return Err(Error::Invalid("hyperparameter mu_mean must be finite".into()));
        }
        self.structure.validate()
    }
}
