use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{j_beta, v2, Kernel};

/// How the bandwidth depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed {
        h: f64,
    },
    /// `h(n) = c·n^{−γ}`.
    Power {
        c: f64,
        gamma: f64,
    },
    /// Minimiser of `V₂/(nh) + h^{2β}J_β²` for the kernel in use.
    MiseOptimal {
        beta: f64,
    },
}

/// `h(n) = c·n^{−γ}`; every rule reduces to this once the kernel is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub c: f64,
    pub gamma: f64,
}

impl PowerLaw {
    pub fn at(&self, n: usize) -> f64 {
        if self.gamma == 0.0 {
            self.c
        } else {
            self.c * (n as f64).powf(-self.gamma)
        }
    }
}

impl BandwidthRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BandwidthRule::Fixed { h } => h > 0.0 && h.is_finite(),
            BandwidthRule::Power { c, gamma } => {
                c > 0.0 && c.is_finite() && gamma > 0.0 && gamma < 1.0
            }
            BandwidthRule::MiseOptimal { beta } => beta > 0.0 && beta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid bandwidth rule {self}"
            )))
        }
    }

    /// Resolves the rule against a kernel.
    pub fn power_law<K: Kernel + ?Sized>(&self, kernel: &K) -> Result<PowerLaw> {
        self.validate()?;
        Ok(match *self {
            BandwidthRule::Fixed { h } => PowerLaw { c: h, gamma: 0.0 },
            BandwidthRule::Power { c, gamma } => PowerLaw { c, gamma },
            BandwidthRule::MiseOptimal { beta } => PowerLaw {
                c: mise_optimal_bandwidth(1, kernel, beta)?,
                gamma: 1.0 / (2.0 * beta + 1.0),
            },
        })
    }

    pub fn bandwidth<K: Kernel + ?Sized>(&self, n: usize, kernel: &K) -> Result<f64> {
        Ok(self.power_law(kernel)?.at(n))
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::Fixed { h } => write!(f, "fixed:{h}"),
            BandwidthRule::Power { c, gamma } => write!(f, "power:{c},{gamma}"),
            BandwidthRule::MiseOptimal { beta } => write!(f, "mise:{beta}"),
        }
    }
}

/// Parses `fixed:H`, `power:C,GAMMA` and `mise:BETA`.
impl FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "bad bandwidth rule '{s}', expected fixed:H, power:C,GAMMA or mise:BETA"
            ))
        };
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let rule = match (kind.trim(), nums.as_slice()) {
            ("fixed", [h]) => BandwidthRule::Fixed { h: *h },
            ("power", [c, gamma]) => BandwidthRule::Power {
                c: *c,
                gamma: *gamma,
            },
            ("mise", [beta]) => BandwidthRule::MiseOptimal { beta: *beta },
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// `h* = [V₂(K)/(2β·n·J_β(K)²)]^{1/(2β+1)}`.
pub fn mise_optimal_bandwidth<K: Kernel + ?Sized>(n: usize, kernel: &K, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let j = j_beta(kernel, beta);
    if !(j > 0.0 && j.is_finite()) {
        return Err(Error::DegenerateMoment(j));
    }
    Ok(bandwidth_from_functionals(n, v2(kernel), j, beta))
}

pub(crate) fn bandwidth_from_functionals(n: usize, v2: f64, j: f64, beta: f64) -> f64 {
    (v2 / (2.0 * beta * n as f64 * j * j)).powf(1.0 / (2.0 * beta + 1.0))
}

/// `V₂/(nh) + h^{2β}J²`, the bound minimised by [`mise_optimal_bandwidth`].
pub fn mise_bound(n: usize, h: f64, v2: f64, j: f64, beta: f64) -> f64 {
    v2 / (n as f64 * h) + h.powf(2.0 * beta) * j * j
}
