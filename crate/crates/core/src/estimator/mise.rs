use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::density::pr_values;
use super::{trapezoid, uniform_grid, BandwidthRule};
use crate::error::{Error, Result};
use crate::kernels::AnyKernel;
use crate::numfmt::sci;

const GRID_MIN: f64 = -8.0;
const GRID_MAX: f64 = 8.0;
const GRID_POINTS: usize = 2001;

/// Built-in targets with analytic densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum TargetDensity {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// `w·N(m1, s1²) + (1−w)·N(m2, s2²)`.
    Mixture {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

impl TargetDensity {
    pub fn standard_normal() -> Self {
        TargetDensity::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Symmetric bimodal mixture `½N(−1.5, ½²) + ½N(1.5, ½²)`.
    pub fn bimodal() -> Self {
        TargetDensity::Mixture {
            weight: 0.5,
            mean1: -1.5,
            sd1: 0.5,
            mean2: 1.5,
            sd2: 0.5,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            TargetDensity::Normal { mean, sd } => normal_pdf(x, mean, sd),
            TargetDensity::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => weight * normal_pdf(x, mean1, sd1) + (1.0 - weight) * normal_pdf(x, mean2, sd2),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TargetDensity::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("valid normal").sample(rng)
            }
            TargetDensity::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                let (m, s) = if rng.random::<f64>() < weight {
                    (mean1, sd1)
                } else {
                    (mean2, sd2)
                };
                Normal::new(m, s).expect("valid normal").sample(rng)
            }
        }
    }
}

/// `normal` or `mixture`.
impl FromStr for TargetDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::standard_normal()),
            "mixture" => Ok(Self::bimodal()),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseRow {
    pub n: usize,
    pub h: f64,
    pub mise: f64,
    /// Standard error of the replication mean.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseTable {
    pub rows: Vec<MiseRow>,
    /// Least-squares slope of `ln MISE` against `ln n`.
    pub slope: f64,
}

impl MiseTable {
    /// Tab-separated table; the last line carries the fitted slope.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\th\tmise\tstd_error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.n,
                sci(r.h),
                sci(r.mise),
                sci(r.std_error)
            );
        }
        let _ = writeln!(out, "slope\t{}", sci(self.slope));
        out
    }
}

/// Monte Carlo estimate of `E∫(f̂ − f)²` for a sequence of sample sizes.
///
/// Replication `i` draws from ChaCha8 stream `i` of `seed`; the sample of size
/// `n` is the first `n` draws of that stream, so tables are reproducible and
/// independent of thread scheduling.
#[derive(Debug, Clone)]
pub struct MiseExperiment {
    pub target: TargetDensity,
    pub kernel: AnyKernel,
    pub n_list: Vec<usize>,
    pub rule: BandwidthRule,
    pub replications: usize,
    pub seed: u64,
}

impl MiseExperiment {
    pub fn run(&self) -> Result<MiseTable> {
        if self.replications == 0 || self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidParameter(
                "need at least one replication and positive sample sizes".into(),
            ));
        }
        let law = self.rule.power_law(&self.kernel)?;
        let grid = uniform_grid(GRID_MIN, GRID_MAX, GRID_POINTS)?;
        let truth: Vec<f64> = grid.iter().map(|&x| self.target.pdf(x)).collect();
        let n_max = *self.n_list.iter().max().expect("non-empty");

        let ise: Vec<Vec<f64>> = (0..self.replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(rep as u64);
                let draws: Vec<f64> = (0..n_max).map(|_| self.target.sample(&mut rng)).collect();
                self.n_list
                    .iter()
                    .map(|&n| {
                        let mut sample = draws[..n].to_vec();
                        sample.sort_by(f64::total_cmp);
                        let fhat = pr_values(&sample, &self.kernel, law.at(n), &grid);
                        let sq: Vec<f64> = fhat
                            .iter()
                            .zip(&truth)
                            .map(|(a, b)| (a - b) * (a - b))
                            .collect();
                        trapezoid(&grid, &sq)
                    })
                    .collect()
            })
            .collect();

        let reps = self.replications as f64;
        let rows: Vec<MiseRow> = self
            .n_list
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let mean = ise.iter().map(|r| r[j]).sum::<f64>() / reps;
                let var = if self.replications > 1 {
                    ise.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (reps - 1.0)
                } else {
                    0.0
                };
                MiseRow {
                    n,
                    h: law.at(n),
                    mise: mean,
                    std_error: (var / reps).sqrt(),
                }
            })
            .collect();
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mise.ln()).collect();
        let slope = least_squares_slope(&xs, &ys);
        Ok(MiseTable { rows, slope })
    }
}

/// Slope of the least-squares line through `(x_i, y_i)`; NaN with fewer than
/// two distinct abscissae.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
