use serde::Serialize;

use super::{AnyKernel, Kernel};
use crate::error::{Error, Result};
use crate::quadrature::{default_rule, PointSet};

/// `V(x₁, …, x_d) = ∏ K(x_j)` on the cube `[-θ, θ]^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductKernel {
    dim: usize,
    base: AnyKernel,
}

impl ProductKernel {
    pub fn new(dim: usize, base: impl Into<AnyKernel>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "product kernel needs dimension >= 2, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            base: base.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &AnyKernel {
        &self.base
    }

    /// # Panics
    /// If `x.len()` differs from the kernel dimension.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension does not match kernel");
        x.iter().map(|&xj| self.base.eval(xj)).product()
    }

    /// Tensor-product Gauss–Legendre cubature of `V` over its support cube.
    pub fn integral(&self) -> f64 {
        let theta = self.base.support();
        let points = if self.base.is_polynomial() {
            PointSet::mapped(default_rule(), -theta, theta)
        } else {
            PointSet::graded_symmetric(default_rule(), theta, 2)
        };
        let weighted: Vec<f64> = points
            .nodes
            .iter()
            .zip(&points.weights)
            .map(|(&x, &w)| w * self.base.eval(x))
            .collect();
        // walk the full lattice; the factorised sum would make this a tautology
        let n = weighted.len();
        let total = n.pow(self.dim as u32);
        let mut sum = 0.0;
        let mut idx = vec![0usize; self.dim];
        for _ in 0..total {
            sum += idx.iter().map(|&i| weighted[i]).product::<f64>();
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
        sum
    }
}
