use serde::Serialize;

use crate::error::{Error, Result};

/// Observations `ξ_1..ξ_n`, row-major when `dim > 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    values: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::multivariate(values, 1)
    }

    pub fn multivariate(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: values.len() % dim,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObservation { index });
        }
        Ok(Self { values, dim })
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Smallest and largest value of a univariate dataset.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn require_univariate(&self) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            })
        }
    }
}
