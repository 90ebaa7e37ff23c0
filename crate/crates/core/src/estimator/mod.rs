//! Kernel density and density-derivative estimation.
//!
//! All estimators evaluate exact kernel sums at the requested grid points.
//! Compact support is exploited by sorting the data once and locating the
//! window `|x − ξ| ≤ θh` by binary search.

mod bandwidth;
mod dataset;
mod density;
pub mod io;
mod mise;

pub use bandwidth::{mise_bound, mise_optimal_bandwidth, BandwidthRule, PowerLaw};
pub use dataset::Dataset;
pub use density::{
    derivative_estimate, log_transform_estimate, parzen_rosenblatt, product_estimate,
    wolverton_wagner, LatticeEstimate, RecursiveEstimator,
};
pub use mise::{least_squares_slope, MiseExperiment, MiseRow, MiseTable, TargetDensity};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelDescriptor;

/// Estimated density (or derivative) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: EstimateMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateMeta {
    pub method: &'static str,
    pub kernel: KernelDescriptor,
    /// Bandwidth, for estimators with a single one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_rule: Option<BandwidthRule>,
    pub n: usize,
    /// Derivative order.
    pub r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DensityEstimate {
    /// Trapezoid integral of the values over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `count` equally spaced points from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !min.is_finite() || !max.is_finite() || min >= max {
        return Err(Error::InvalidParameter(format!(
            "bad grid {min}:{max}:{count}"
        )));
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                max
            } else {
                min + step * i as f64
            }
        })
        .collect())
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_trapezoid() {
        let g = uniform_grid(-1.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(trapezoid(&g, &[1.0; 5]), 2.0);
        assert!(uniform_grid(1.0, 0.0, 5).is_err());
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[]).is_err());
    }
}
