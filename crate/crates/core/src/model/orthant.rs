//! Reference evaluation of class probabilities: the latent Gaussian mass of
//! the box of score intervals selected by a class vector. Nested
//! one-dimensional quadrature, so only small `p` is supported.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::density::ExpressionClass;
use crate::model::state::SemParams;
use crate::special::{norm_cdf, norm_log_pdf, CompositeRule};

pub const MAX_REFERENCE_DIM: usize = 3;

/// Probability that the latent scores fall in the box of intervals
/// selected by `classes`, under the structural-equation Gaussian with mean
/// `m`. Supports `p <= 3`; accurate to well below `1e-6`.
pub fn orthant_probability_reference(classes: &[ExpressionClass], m: &[f64], sem: &SemParams) -> Result<f64> {
    let p = classes.len();
    if p > MAX_REFERENCE_DIM {
        return Err(Error::Invalid(format!(
            "reference orthant probability supports p <= {MAX_REFERENCE_DIM}, got {p}"
        )));
    }
    if m.len() != p || sem.structure.dim() != p {
        return Err(Error::Dimension("class vector, mean and model disagree".into()));
    }
    let cov = covariance(sem)?;
    let lo: Vec<f64> = classes.iter().map(|c| c.score_interval().0).collect();
    let hi: Vec<f64> = classes.iter().map(|c| c.score_interval().1).collect();
    let rule = CompositeRule::new(48, 20);
    Ok(box_mass(&DVector::from_column_slice(m), &cov, &lo, &hi, &rule))
}

/// `Sigma = B^-1 H^-1 B^-T`.
pub fn covariance(sem: &SemParams) -> Result<DMatrix<f64>> {
    let binv = sem.structure.inverse().to_dmatrix();
    let hinv = DMatrix::from_diagonal(&DVector::from_column_slice(&sem.s2));
    let cov = &binv * hinv * binv.transpose();
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(cov)
}

fn box_mass(mean: &DVector<f64>, cov: &DMatrix<f64>, lo: &[f64], hi: &[f64], rule: &CompositeRule) -> f64 {
    let d = mean.len();
    if d == 0 {
        return 1.0;
    }
    let sd = cov[(0, 0)].sqrt();
    if d == 1 {
        return (norm_cdf((hi[0] - mean[0]) / sd) - norm_cdf((lo[0] - mean[0]) / sd)).max(0.0);
    }
    let a = lo[0].max(mean[0] - 12.0 * sd);
    let b = hi[0].min(mean[0] + 12.0 * sd);
    if !(a < b) {
        return 0.0;
    }
    // Conditional law of the remaining coordinates given the first.
    let s11 = cov[(0, 0)];
    let s_r1 = cov.view((1, 0), (d - 1, 1)).into_owned();
    let s_rr = cov.view((1, 1), (d - 1, d - 1)).into_owned();
    let cond_cov = &s_rr - &s_r1 * s_r1.transpose() / s11;
    let gain = &s_r1 / s11;
    let rest_mean = mean.rows(1, d - 1).into_owned();
    rule.integrate(a, b, |x| {
        let u = (x - mean[0]) / sd;
        let cm = &rest_mean + &gain * (x - mean[0]);
        let cm = DVector::from_column_slice(cm.as_slice());
        norm_log_pdf(u).exp() / sd * box_mass(&cm, &cond_cov, &lo[1..], &hi[1..], rule)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matrix::RowMatrix;
    use crate::model::structural::StructuralMatrix;

    fn identity_sem(p: usize) -> SemParams {
        SemParams {
            structure: StructuralMatrix::identity(p),
            s2: vec![1.0; p],
            b_coeffs: RowMatrix::zeros(p, 1),
        }
    }

    #[test]
    fn univariate_masses() {
        let sem = identity_sem(1);
        let v = orthant_probability_reference(&[ExpressionClass::Normal], &[0.0], &sem).unwrap();
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-12);
        let v = orthant_probability_reference(&[ExpressionClass::High], &[0.0], &sem).unwrap();
        assert!((v - 0.158_655_253_931_457_05).abs() < 1e-12);
    }

    #[test]
    fn independent_bivariate_factorizes() {
        let sem = identity_sem(2);
        let v = orthant_probability_reference(&[ExpressionClass::Normal, ExpressionClass::High], &[0.0, 0.0], &sem)
            .unwrap();
        let want = 0.682_689_492_137_085_9 * 0.158_655_253_931_457_05;
        assert!((v - want).abs() < 1e-9);
    }

    #[test]
    fn masses_sum_to_one_over_all_class_vectors() {
        let b = RowMatrix::from_vec(3, 3, vec![1.0, -0.4, 0.0, 0.0, 1.0, 0.3, 0.5, 0.0, 1.0]);
        let sem = SemParams {
            structure: StructuralMatrix::from_dense(b).unwrap(),
            s2: vec![0.8, 1.3, 0.6],
            b_coeffs: RowMatrix::zeros(3, 1),
        };
        let m = [0.2, -0.5, 0.9];
        let mut total = 0.0;
        for a in ExpressionClass::ALL {
            for b in ExpressionClass::ALL {
                for c in ExpressionClass::ALL {
                    total += orthant_probability_reference(&[a, b, c], &m, &sem).unwrap();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-7, "total {total}");
    }

    #[test]
    fn rejects_large_p() {
        let sem = identity_sem(4);
        assert!(orthant_probability_reference(&[ExpressionClass::Normal; 4], &[0.0; 4], &sem).is_err());
    }
}
