use crate::error::{Error, Result};
use crate::model::matrix::RowMatrix;

/// Observed `p x n` expression matrix together with the `n x d` design.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionDataset {
    y: RowMatrix,
    x: RowMatrix,
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
}

impl ExpressionDataset {
    pub fn new(y: RowMatrix, x: RowMatrix, gene_ids: Vec<String>, sample_ids: Vec<String>) -> Result<Self> {
        let (p, n) = (y.rows(), y.cols());
        if p == 0 || n == 0 {
            return Err(Error::Dimension("expression matrix is empty".into()));
        }
        if gene_ids.len() != p {
            return Err(Error::Dimension(format!(
                "{} gene ids for {} expression rows",
                gene_ids.len(),
                p
            )));
        }
        if sample_ids.len() != n {
            return Err(Error::Dimension(format!(
                "{} sample ids for {} expression columns",
                sample_ids.len(),
                n
            )));
        }
        if x.rows() != n {
            return Err(Error::Dimension(format!(
                "design has {} rows, expression has {} samples",
                x.rows(),
                n
            )));
        }
        if x.cols() == 0 {
            return Err(Error::Dimension("design needs at least one covariate".into()));
        }
        if let Some(pos) = y.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite expression value for gene {} sample {}",
                gene_ids[pos / n],
                sample_ids[pos % n]
            )));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite design value".into()));
        }
        Ok(ExpressionDataset {
            y,
            x,
            gene_ids,
            sample_ids,
        })
    }

    pub fn genes(&self) -> usize {
        self.y.rows()
    }

    pub fn samples(&self) -> usize {
        self.y.cols()
    }

    pub fn covariates(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &RowMatrix {
        &self.y
    }

    /// Mutable access for resampling data in joint-distribution tests.
    pub fn y_mut(&mut self) -> &mut RowMatrix {
        &mut self.y
    }

    pub fn design(&self) -> &RowMatrix {
        &self.x
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }
}
