//! Density evaluations of the observation mixture and of the latent
//! structural-equation Gaussian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::matrix::RowMatrix;
use crate::model::state::SemParams;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Latent expression class of one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i8)]
pub enum ExpressionClass {
    Low = -1,
    Normal = 0,
    High = 1,
}

impl ExpressionClass {
    pub const ALL: [ExpressionClass; 3] = [ExpressionClass::Low, ExpressionClass::Normal, ExpressionClass::High];

    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(ExpressionClass::Low),
            0 => Some(ExpressionClass::Normal),
            1 => Some(ExpressionClass::High),
            _ => None,
        }
    }

    /// Score interval `(lo, hi]` mapped to this class; `Low` is `(-inf, -1]`.
    pub fn score_interval(self) -> (f64, f64) {
        match self {
            ExpressionClass::Low => (f64::NEG_INFINITY, -1.0),
            ExpressionClass::Normal => (-1.0, 1.0),
            ExpressionClass::High => (1.0, f64::INFINITY),
        }
    }
}

/// Thresholds a probit score at -1 and +1: `z > 1` is high,
/// `-1 < z <= 1` normal, `z <= -1` low.
#[inline]
pub fn indicator_from_score(z: f64) -> ExpressionClass {
    if z > 1.0 {
        ExpressionClass::High
    } else if z > -1.0 {
        ExpressionClass::Normal
    } else {
        ExpressionClass::Low
    }
}

/// Log density of `y` given its class. With `r = y - alpha - mu` the
/// normal class is `N(r; 0, sigma2)`, the high class `U(0, kappa_plus]`
/// and the low class `U(-kappa_minus, 0]`; outside the uniform supports the
/// result is `-inf`.
#[inline]
pub fn mixture_log_density(
    y: f64,
    e: ExpressionClass,
    alpha: f64,
    mu: f64,
    sigma2: f64,
    kappa_minus: f64,
    kappa_plus: f64,
) -> f64 {
    residual_log_density(y - alpha - mu, e, sigma2, kappa_minus, kappa_plus)
}

#[inline]
pub(crate) fn residual_log_density(r: f64, e: ExpressionClass, sigma2: f64, kappa_minus: f64, kappa_plus: f64) -> f64 {
    match e {
        ExpressionClass::Normal => -LN_SQRT_2PI - 0.5 * sigma2.ln() - 0.5 * r * r / sigma2,
        ExpressionClass::High => {
            if r > 0.0 && r <= kappa_plus {
                -kappa_plus.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        ExpressionClass::Low => {
            if r > -kappa_minus && r <= 0.0 {
                -kappa_minus.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// `m_ij = x_j' b_i` for every gene `i` and sample `j`.
pub fn mean_surface(design: &RowMatrix, b_coeffs: &RowMatrix) -> Result<RowMatrix> {
    if design.cols() != b_coeffs.cols() {
        return Err(Error::Dimension(format!(
            "design has {} covariates, coefficients have {}",
            design.cols(),
            b_coeffs.cols()
        )));
    }
    let (p, n) = (b_coeffs.rows(), design.rows());
    Ok(RowMatrix::from_fn(p, n, |i, j| dot(design.row(j), b_coeffs.row(i))))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log density of one latent score column under the structural equations:
/// `log|det B| - sum_i log(2 pi s_i^2)/2 - |H^(1/2) B (z - m)|^2 / 2`, the
/// Gaussian with precision `B' H B`, `H = diag(1/s_i^2)`.
pub fn sem_log_density(z: &[f64], m: &[f64], sem: &SemParams) -> Result<f64> {
    let b = &sem.structure;
    let p = b.dim();
    if z.len() != p || m.len() != p || sem.s2.len() != p {
        return Err(Error::Dimension(format!(
            "score column of length {} for a {p}-gene model",
            z.len()
        )));
    }
    if !b.log_abs_det().is_finite() {
        return Err(Error::Singular);
    }
    let d: Vec<f64> = z.iter().zip(m).map(|(a, c)| a - c).collect();
    let mut out = b.log_abs_det() - p as f64 * LN_SQRT_2PI;
    for i in 0..p {
        let eps = dot(b.dense().row(i), &d);
        out -= 0.5 * sem.s2[i].ln() + 0.5 * eps * eps / sem.s2[i];
    }
    Ok(out)
}

/// Mean and variance of `z_i` given the rest of its column, from the
/// precision `Omega = B' H B`: variance `1/omega_ii`, mean
/// `m_i - sum_{k != i} omega_ik (z_k - m_k) / omega_ii`.
pub fn conditional_score_law(i: usize, z: &[f64], m: &[f64], sem: &SemParams) -> Result<(f64, f64)> {
    let b = &sem.structure;
    let p = b.dim();
    if i >= p {
        return Err(Error::NodeOutOfRange { index: i, p });
    }
    if z.len() != p || m.len() != p {
        return Err(Error::Dimension("score column length".into()));
    }
    let d: Vec<f64> = z.iter().zip(m).map(|(a, c)| a - c).collect();
    // Only rows r with B[r][i] != 0 contribute to row i of Omega.
    let mut omega_ii = 0.0;
    let mut weighted = 0.0;
    for r in 0..p {
        let bri = b.entry(r, i);
        if bri == 0.0 {
            continue;
        }
        let h = 1.0 / sem.s2[r];
        omega_ii += h * bri * bri;
        weighted += h * bri * dot(b.dense().row(r), &d);
    }
    if !(omega_ii > 0.0) {
        return Err(Error::Invalid(format!(
            "non-positive conditional precision for gene {i}"
        )));
    }
    // sum_k omega_ik d_k = weighted; drop the k = i term.
    Ok((z[i] - weighted / omega_ii, 1.0 / omega_ii))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::structural::StructuralMatrix;

    fn sem(b: StructuralMatrix, s2: Vec<f64>) -> SemParams {
        let p = b.dim();
        SemParams {
            structure: b,
            s2,
            b_coeffs: RowMatrix::zeros(p, 1),
        }
    }

    #[test]
    fn mixture_examples() {
        let v = mixture_log_density(0.0, ExpressionClass::Normal, 0.0, 0.0, 1.0, 3.0, 3.0);
        assert!((v + 0.918_938_533_204_672_8).abs() < 1e-15);
        let v = mixture_log_density(0.5, ExpressionClass::High, 0.0, 0.0, 1.0, 3.0, 2.0);
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
        let v = mixture_log_density(-0.3, ExpressionClass::High, 0.0, 0.0, 1.0, 3.0, 3.0);
        assert_eq!(v, f64::NEG_INFINITY);
        let v = mixture_log_density(-0.3, ExpressionClass::Low, 0.0, 0.0, 1.0, 3.0, 3.0);
        assert!((v + 3f64.ln()).abs() < 1e-15);
        assert_eq!(
            mixture_log_density(-3.5, ExpressionClass::Low, 0.0, 0.0, 1.0, 3.0, 3.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn indicator_thresholds() {
        assert_eq!(indicator_from_score(1.5), ExpressionClass::High);
        assert_eq!(indicator_from_score(0.0), ExpressionClass::Normal);
        assert_eq!(indicator_from_score(-2.0), ExpressionClass::Low);
        assert_eq!(indicator_from_score(1.0), ExpressionClass::Normal);
        assert_eq!(indicator_from_score(-1.0), ExpressionClass::Low);
    }

    #[test]
    fn univariate_sem_density_is_standard_normal() {
        let s = sem(StructuralMatrix::identity(1), vec![1.0]);
        let v = sem_log_density(&[0.3], &[0.3], &s).unwrap();
        assert!((v + LN_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn empty_graph_factorizes() {
        let s2 = vec![0.5, 2.0, 1.5];
        let s = sem(StructuralMatrix::identity(3), s2.clone());
        let z = [0.1, -1.2, 2.0];
        let m = [0.0, 0.5, 1.0];
        let joint = sem_log_density(&z, &m, &s).unwrap();
        let sep: f64 = (0..3)
            .map(|i| -LN_SQRT_2PI - 0.5 * s2[i].ln() - 0.5 * (z[i] - m[i]).powi(2) / s2[i])
            .sum();
        assert!((joint - sep).abs() < 1e-12);
        let (mean, var) = conditional_score_law(1, &z, &m, &s).unwrap();
        assert!((mean - 0.5).abs() < 1e-15 && (var - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mean_surface_group_coding() {
        let x = RowMatrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 1.0]);
        let b = RowMatrix::from_vec(1, 2, vec![0.0, 1.0]);
        let m = mean_surface(&x, &b).unwrap();
        assert_eq!(m.row(0), &[0.0, 1.0]);
        let zero = mean_surface(&x, &RowMatrix::zeros(3, 2)).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));
        assert!(mean_surface(&x, &RowMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn sem_density_dimension_errors() {
        let s = sem(StructuralMatrix::identity(2), vec![1.0, 1.0]);
        assert!(sem_log_density(&[0.0], &[0.0, 0.0], &s).is_err());
        assert!(conditional_score_law(2, &[0.0, 0.0], &[0.0, 0.0], &s).is_err());
    }
}
