//! Gauss–Legendre quadrature.
//!
//! Every moment and norm check in the crate goes through these rules. The
//! kernels are polynomials of modest degree, so a 64-node rule integrates them
//! exactly up to rounding; integrands involving `|y|^β` are split at the kink.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orthopoly::legendre_with_derivative;

/// Node count used for all polynomial constraint checks.
pub const DEFAULT_NODES: usize = 64;
/// Node count per half-interval for non-smooth integrands.
pub const SPLIT_NODES: usize = 128;

const MAX_NODES: usize = 256;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        integrate(f, a, b, self)
    }
}

/// Builds the `n`-point rule. Nodes are the roots of `P_n`, found by Newton
/// iteration from the Chebyshev-angle guess `cos(π(i + 3/4)/(n + 1/2))`;
/// weights are `2/((1 − x²) P_n'(x)²)`.
pub fn gauss_legendre_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "quadrature node count must lie in 1..={MAX_NODES}, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // roots come in ± pairs; solve for the positive half and mirror
    for i in 0..n / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_with_derivative(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNotConverged { n });
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `∫_a^b f` with the rule mapped affinely onto `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &QuadratureRule) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum();
    half * sum
}

/// `∫_a^b f` with the interval cut at every breakpoint strictly inside `(a, b)`.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rule: &QuadratureRule,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for c in cuts.into_iter().chain(std::iter::once(b)) {
        total += integrate(&f, lo, c, rule);
        lo = c;
    }
    total
}

/// Explicit nodes and weights on a concrete interval, e.g. a composite rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSet {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PointSet {
    /// The rule mapped onto `[a, b]`.
    pub fn mapped(rule: &QuadratureRule, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Self {
            nodes: rule.nodes.iter().map(|x| mid + half * x).collect(),
            weights: rule.weights.iter().map(|w| half * w).collect(),
        }
    }

    /// Composite rule on `[-θ, θ]` for integrands with an algebraic kink at
    /// zero: each half is cut at `θ·2^{-j}`, `j = 1..levels`, and every piece
    /// gets a copy of `rule`.
    pub fn graded_symmetric(rule: &QuadratureRule, theta: f64, levels: usize) -> Self {
        let mut right = PointSet {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        let mut hi = theta;
        for _ in 0..levels {
            let lo = 0.5 * hi;
            right.extend(PointSet::mapped(rule, lo, hi));
            hi = lo;
        }
        right.extend(PointSet::mapped(rule, 0.0, hi));
        let mut out = PointSet {
            nodes: right.nodes.iter().rev().map(|x| -x).collect(),
            weights: right.weights.iter().rev().copied().collect(),
        };
        out.extend(right);
        out
    }

    fn extend(&mut self, other: PointSet) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Grading depth used by [`PointSet::graded_symmetric`] for kernel integrals.
pub const GRADING_LEVELS: usize = 30;

/// Shared 64-node rule.
pub fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(DEFAULT_NODES).expect("64-node rule"))
}

/// Shared 128-node rule for split integrals.
pub fn split_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(SPLIT_NODES).expect("128-node rule"))
}
