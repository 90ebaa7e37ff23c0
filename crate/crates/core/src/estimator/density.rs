use rayon::prelude::*;
use serde::Serialize;

use super::{check_grid, BandwidthRule, Dataset, DensityEstimate, EstimateMeta, PowerLaw};
use crate::error::{Error, Result};
use crate::kernels::{AnyKernel, Kernel, KernelDescriptor, ProductKernel};

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {h}"
        )))
    }
}

fn sorted(data: &Dataset) -> Vec<f64> {
    let mut v = data.values().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Observations with `|x − ξ| ≤ reach`.
fn window(sorted: &[f64], x: f64, reach: f64) -> &[f64] {
    let lo = sorted.partition_point(|&v| v < x - reach);
    let hi = sorted.partition_point(|&v| v <= x + reach);
    &sorted[lo..hi]
}

/// `Σ_i f((x − ξ_i)/h)` over the support window, at every grid point.
fn windowed_sums<F>(sorted: &[f64], grid: &[f64], h: f64, theta: f64, f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    grid.par_iter()
        .map(|&x| {
            window(sorted, x, theta * h)
                .iter()
                .map(|&xi| f((x - xi) / h))
                .sum()
        })
        .collect()
}

pub(crate) fn pr_values(sorted: &[f64], kernel: &AnyKernel, h: f64, grid: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (sorted.len() as f64 * h);
    let mut v = windowed_sums(sorted, grid, h, kernel.support(), |u| kernel.eval(u));
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

fn meta(
    method: &'static str,
    kernel: &AnyKernel,
    h: Option<f64>,
    n: usize,
    r: usize,
) -> EstimateMeta {
    EstimateMeta {
        method,
        kernel: kernel.descriptor(),
        h,
        bandwidth_rule: None,
        n,
        r,
        note: None,
    }
}

/// `f_n(x) = (1/(nh)) Σ K((x − ξ_i)/h)`.
pub fn parzen_rosenblatt(
    data: &Dataset,
    kernel: &AnyKernel,
    h: f64,
    grid: &[f64],
) -> Result<DensityEstimate> {
    data.require_univariate()?;
    check_bandwidth(h)?;
    check_grid(grid)?;
    let values = pr_values(&sorted(data), kernel, h, grid);
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta: meta("parzen_rosenblatt", kernel, Some(h), data.len(), 0),
    })
}

/// `f_n^{(r)}(x) = (1/(n h^{1+r})) Σ K^{(r)}((x − ξ_i)/h)`, the exact `r`-th
/// derivative of the Parzen–Rosenblatt curve. Polynomial kernels only.
pub fn derivative_estimate(
    data: &Dataset,
    kernel: &AnyKernel,
    r: usize,
    h: f64,
    grid: &[f64],
) -> Result<DensityEstimate> {
    data.require_univariate()?;
    check_bandwidth(h)?;
    check_grid(grid)?;
    let poly = match kernel {
        AnyKernel::Poly(p) => p,
        AnyKernel::Frac(_) if r == 0 => return parzen_rosenblatt(data, kernel, h, grid),
        AnyKernel::Frac(_) => {
            return Err(Error::UnsupportedDerivative {
                order: r,
                kernel: "fractional",
            })
        }
    };
    let scale = 1.0 / (data.len() as f64 * h.powi(1 + r as i32));
    let mut values = windowed_sums(&sorted(data), grid, h, poly.theta(), |u| {
        poly.eval_deriv(r, u)
    });
    values.iter_mut().for_each(|x| *x *= scale);
    let mut meta = meta("derivative", kernel, Some(h), data.len(), r);
    if r % 2 == 1 {
        meta.note = Some(
            "argument is (x - xi)/h so that values are the derivative of the density estimate"
                .into(),
        );
    }
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta,
    })
}

/// Streaming Wolverton–Wagner estimator on a fixed grid:
/// `f_n = ((n−1) f_{n−1} + h_n^{−1} K((x − ξ_n)/h_n)) / n`.
#[derive(Debug, Clone)]
pub struct RecursiveEstimator {
    kernel: AnyKernel,
    rule: BandwidthRule,
    law: PowerLaw,
    grid: Vec<f64>,
    values: Vec<f64>,
    n: usize,
}

impl RecursiveEstimator {
    pub fn new(kernel: AnyKernel, rule: BandwidthRule, grid: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        let law = rule.power_law(&kernel)?;
        let values = vec![0.0; grid.len()];
        Ok(Self {
            kernel,
            rule,
            law,
            grid,
            values,
            n: 0,
        })
    }

    /// Folds one observation into the grid values.
    pub fn push(&mut self, xi: f64) -> Result<()> {
        if !xi.is_finite() {
            return Err(Error::NonFiniteObservation { index: self.n });
        }
        self.n += 1;
        let n = self.n as f64;
        let h = self.law.at(self.n);
        let reach = self.kernel.support() * h;
        for (x, v) in self.grid.iter().zip(self.values.iter_mut()) {
            let contrib = if (x - xi).abs() <= reach {
                self.kernel.eval((x - xi) / h) / h
            } else {
                0.0
            };
            *v = ((n - 1.0) * *v + contrib) / n;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn estimate(&self) -> Result<DensityEstimate> {
        if self.n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut meta = meta("wolverton_wagner", &self.kernel, None, self.n, 0);
        meta.bandwidth_rule = Some(self.rule);
        Ok(DensityEstimate {
            grid: self.grid.clone(),
            values: self.values.clone(),
            meta,
        })
    }
}

/// `f_n(x) = (1/n) Σ_i h_i^{−1} K((x − ξ_i)/h_i)` with `h_i = rule(i)`, data
/// taken in arrival order.
pub fn wolverton_wagner(
    data: &Dataset,
    kernel: &AnyKernel,
    rule: BandwidthRule,
    grid: &[f64],
) -> Result<DensityEstimate> {
    data.require_univariate()?;
    check_grid(grid)?;
    let law = rule.power_law(kernel)?;
    let hs: Vec<f64> = (1..=data.len()).map(|i| law.at(i)).collect();
    let theta = kernel.support();
    let n = data.len() as f64;
    let values = if law.gamma == 0.0 {
        // one bandwidth: same windowed sum as the batch estimator
        let h = law.c;
        let mut v = windowed_sums(&sorted(data), grid, h, theta, |u| kernel.eval(u) / h);
        v.iter_mut().for_each(|x| *x /= n);
        v
    } else {
        grid.par_iter()
            .map(|&x| {
                data.values()
                    .iter()
                    .zip(&hs)
                    .filter(|(xi, h)| (x - **xi).abs() <= theta * **h)
                    .map(|(xi, h)| kernel.eval((x - xi) / h) / h)
                    .sum::<f64>()
                    / n
            })
            .collect()
    };
    let mut meta = meta("wolverton_wagner", kernel, None, data.len(), 0);
    meta.bandwidth_rule = Some(rule);
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta,
    })
}

/// Density of `ξ > 0` through `η = ln ξ`: `f̂_ξ(t) = f̂_η(ln t)/t`.
pub fn log_transform_estimate(
    data: &Dataset,
    kernel: &AnyKernel,
    h: f64,
    grid: &[f64],
) -> Result<DensityEstimate> {
    data.require_univariate()?;
    check_bandwidth(h)?;
    check_grid(grid)?;
    if let Some(index) = data.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveObservation {
            index,
            value: data.values()[index],
        });
    }
    if grid[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "log-transform grid must lie in (0, inf)".into(),
        ));
    }
    let logs = Dataset::new(data.values().iter().map(|v| v.ln()).collect())?;
    let log_grid: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
    let eta = pr_values(&sorted(&logs), kernel, h, &log_grid);
    let values = eta.iter().zip(grid).map(|(f, t)| f / t).collect();
    let mut meta = meta("log_transform", kernel, Some(h), data.len(), 0);
    meta.note =
        Some("Parzen-Rosenblatt estimate of ln(xi), mapped back with the Jacobian 1/t".into());
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta,
    })
}

/// Multivariate estimate on a tensor lattice, values in row-major order
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeEstimate {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub kernel: KernelDescriptor,
    pub dim: usize,
    pub h: f64,
    pub n: usize,
}

impl LatticeEstimate {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Tensor trapezoid integral over the lattice.
    pub fn trapezoid_mass(&self) -> f64 {
        let weights: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let shape = self.shape();
        self.values
            .iter()
            .enumerate()
            .map(|(flat, v)| {
                let mut rest = flat;
                let mut w = 1.0;
                for axis in (0..shape.len()).rev() {
                    w *= weights[axis][rest % shape[axis]];
                    rest /= shape[axis];
                }
                w * v
            })
            .sum()
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; axis.len()];
    for (i, pair) in axis.windows(2).enumerate() {
        let half = 0.5 * (pair[1] - pair[0]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// `f̂(x) = (1/(n h^d)) Σ_i Π_j K((x_j − ξ_ij)/h)` on the lattice spanned by `axes`.
pub fn product_estimate(
    data: &Dataset,
    kernel: &ProductKernel,
    h: f64,
    axes: &[Vec<f64>],
) -> Result<LatticeEstimate> {
    let d = kernel.dim();
    if data.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: data.dim(),
        });
    }
    if axes.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: axes.len(),
        });
    }
    check_bandwidth(h)?;
    for a in axes {
        check_grid(a)?;
    }
    let base = kernel.base();
    // per-axis kernel factors: factors[j][i * len_j + g]
    let factors: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            data.rows()
                .flat_map(|row| axes[j].iter().map(move |&x| base.eval((x - row[j]) / h)))
                .collect()
        })
        .collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let n = data.len();
    let scale = 1.0 / (n as f64 * h.powi(d as i32));
    let values = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; d];
            let mut rest = flat;
            for axis in (0..d).rev() {
                idx[axis] = rest % shape[axis];
                rest /= shape[axis];
            }
            let sum: f64 = (0..n)
                .map(|i| {
                    (0..d)
                        .map(|j| factors[j][i * shape[j] + idx[j]])
                        .product::<f64>()
                })
                .sum();
            sum * scale
        })
        .collect();
    Ok(LatticeEstimate {
        axes: axes.to_vec(),
        values,
        kernel: base.descriptor(),
        dim: d,
        h,
        n,
    })
}
