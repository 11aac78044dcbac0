//! The structural matrix `B` (unit diagonal, `B[i][k] = -beta_ik`) with its
//! inverse and log-determinant kept current under single-row updates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::matrix::RowMatrix;

/// Determinant ratios smaller than this in magnitude count as singular.
pub const SINGULAR_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrix {
    p: usize,
    b: RowMatrix,
    inv: RowMatrix,
    log_abs_det: f64,
}

impl StructuralMatrix {
    pub fn identity(p: usize) -> Self {
        let eye = RowMatrix::from_fn(p, p, |i, k| if i == k { 1.0 } else { 0.0 });
        StructuralMatrix {
            p,
            b: eye.clone(),
            inv: eye,
            log_abs_det: 0.0,
        }
    }

    /// Builds from a dense matrix whose diagonal must be exactly one.
    pub fn from_dense(b: RowMatrix) -> Result<Self> {
        if b.rows() != b.cols() {
            return Err(Error::Dimension(format!(
                "structural matrix is {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        for i in 0..b.rows() {
            if b[(i, i)] != 1.0 {
                return Err(Error::Invalid(format!("structural matrix diagonal at {i} is not 1")));
            }
        }
        let (inv, log_abs_det) = invert(&b)?;
        Ok(StructuralMatrix {
            p: b.rows(),
            b,
            inv,
            log_abs_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.b[(i, k)]
    }

    /// Coefficient of `z_k` in the equation of `z_i`.
    #[inline]
    pub fn beta(&self, i: usize, k: usize) -> f64 {
        -self.b[(i, k)]
    }

    pub fn dense(&self) -> &RowMatrix {
        &self.b
    }

    pub fn inverse(&self) -> &RowMatrix {
        &self.inv
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    /// `det(B') / det(B)` where `B'` adds `deltas[(k, d)]` to `B[i][k]`.
    /// By the matrix determinant lemma this is `1 + sum_k d_k inv[k][i]`.
    pub fn det_ratio(&self, i: usize, deltas: &[(usize, f64)]) -> f64 {
        1.0 + deltas.iter().map(|&(k, d)| d * self.inv[(k, i)]).sum::<f64>()
    }

    /// Applies a row change whose determinant ratio `ratio` was obtained
    /// from [`det_ratio`](Self::det_ratio), updating the inverse with the
    /// Sherman-Morrison formula.
    pub fn apply_row_change(&mut self, i: usize, deltas: &[(usize, f64)], ratio: f64) {
        debug_assert!(ratio.abs() >= SINGULAR_RATIO);
        let p = self.p;
        for &(k, d) in deltas {
            debug_assert_ne!(k, i, "diagonal is fixed at one");
            self.b[(i, k)] += d;
        }
        // w = d' inv  (row vector)
        let mut w = vec![0.0; p];
        for &(k, d) in deltas {
            let row = self.inv.row(k);
            for (wc, &r) in w.iter_mut().zip(row) {
                *wc += d * r;
            }
        }
        let col: Vec<f64> = (0..p).map(|r| self.inv[(r, i)]).collect();
        for (r, &c) in col.iter().enumerate() {
            let f = c / ratio;
            if f != 0.0 {
                let row = self.inv.row_mut(r);
                for (x, &wc) in row.iter_mut().zip(&w) {
                    *x -= f * wc;
                }
            }
        }
        self.log_abs_det += ratio.abs().ln();
    }

    /// Recomputes the inverse and log-determinant by LU. Returns the
    /// absolute drift of the incrementally maintained log-determinant.
    pub fn refresh(&mut self) -> Result<f64> {
        let (inv, log_abs_det) = invert(&self.b)?;
        let drift = (log_abs_det - self.log_abs_det).abs();
        self.inv = inv;
        self.log_abs_det = log_abs_det;
        Ok(drift)
    }
}

fn invert(b: &RowMatrix) -> Result<(RowMatrix, f64)> {
    let m: DMatrix<f64> = b.to_dmatrix();
    let lu = m.lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < 1e-300 {
        return Err(Error::Singular);
    }
    let inv = lu.try_inverse().ok_or(Error::Singular)?;
    Ok((RowMatrix::from_dmatrix(&inv), det.abs().ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_det(b: &RowMatrix) -> f64 {
        b.to_dmatrix().determinant()
    }

    #[test]
    fn incremental_updates_track_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 6;
        let mut s = StructuralMatrix::identity(p);
        for _ in 0..200 {
            let i = rng.random_range(0..p);
            let mut deltas = Vec::new();
            for k in 0..p {
                if k != i && rng.random_bool(0.4) {
                    deltas.push((k, rng.random_range(-0.5..0.5)));
                }
            }
            let ratio = s.det_ratio(i, &deltas);
            if ratio.abs() < 0.05 {
                continue;
            }
            let before = dense_det(s.dense());
            s.apply_row_change(i, &deltas, ratio);
            let after = dense_det(s.dense());
            assert!((after / before - ratio).abs() < 1e-8 * ratio.abs().max(1.0));
        }
        let prod = s.dense().to_dmatrix() * s.inverse().to_dmatrix();
        assert!((prod - DMatrix::<f64>::identity(p, p)).abs().max() < 1e-8);
        let drift = s.refresh().unwrap();
        assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn singular_dense_rejected() {
        // rows 0 and 1 identical
        let b = RowMatrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(StructuralMatrix::from_dense(b), Err(Error::Singular)));
        let b = RowMatrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]);
        assert!(StructuralMatrix::from_dense(b).is_err());
    }
}
