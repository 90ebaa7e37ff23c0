//! Legendre polynomials on `[-1, 1]`, their dilations to `[-θ, θ]` and the
//! moment constant `μ(k) = ½∫₋₁¹ x^k P_k(x) dx`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// `P_k(x)` by the three-term recurrence `(k+1)P_{k+1} = (2k+1)xP_k − kP_{k−1}`.
pub fn legendre_eval(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for j in 1..k {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `(P_k(x), P_k'(x))`, used by the quadrature node search.
pub(crate) fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let p = legendre_eval(k, x);
    (p, legendre_deriv(k, 1, x))
}

/// `d^r P_k / dx^r` at `x`.
///
/// Uses the differentiated recurrence
/// `(j+1)P_{j+1}^{(s)} = (2j+1)(x P_j^{(s)} + s P_j^{(s−1)}) − j P_{j−1}^{(s)}`
/// for all `s ≤ r` simultaneously, so the cost is `O(k·r)`.
pub fn legendre_deriv(k: usize, r: usize, x: f64) -> f64 {
    if r > k {
        return 0.0;
    }
    if r == 0 {
        return legendre_eval(k, x);
    }
    // prev[s] = P_{j-1}^{(s)}, cur[s] = P_j^{(s)}
    let mut prev = vec![0.0; r + 1];
    let mut cur = vec![0.0; r + 1];
    prev[0] = 1.0;
    cur[0] = x;
    cur[1] = 1.0;
    let mut next = vec![0.0; r + 1];
    for j in 1..k {
        let jf = j as f64;
        for s in 0..=r {
            let lower = if s == 0 { 0.0 } else { s as f64 * cur[s - 1] };
            next[s] = ((2.0 * jf + 1.0) * (x * cur[s] + lower) - jf * prev[s]) / (jf + 1.0);
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    cur[r]
}

/// Monomial coefficients of `P_k`, lowest degree first.
pub fn legendre_coefficients(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..k {
        let jf = j as f64;
        let mut next = vec![0.0; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += (2.0 * jf + 1.0) * c / (jf + 1.0);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= jf * c / (jf + 1.0);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// The moment constant `μ(k)`, exact and rounded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentConstant {
    pub k: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub exact: BigRational,
    pub value: f64,
}

fn serialize_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// `μ(k) = 2^k (k!)² / (2k+1)!`, evaluated as `2^k / ((2k+1)·C(2k,k))` in exact
/// integer arithmetic.
pub fn moment_mu(k: usize) -> MomentConstant {
    let mut central = BigUint::one();
    for i in 1..=k {
        central = central * BigUint::from(k + i) / BigUint::from(i);
    }
    let numer = BigInt::one() << k;
    let denom = BigInt::from(central * BigUint::from(2 * k + 1));
    let exact = BigRational::new(numer, denom);
    let value = exact.to_f64().unwrap_or(0.0);
    MomentConstant { k, exact, value }
}

/// Legendre polynomials up to a fixed degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LegendreBasis {
    pub max_degree: usize,
}

impl LegendreBasis {
    pub fn new(max_degree: usize) -> Self {
        Self { max_degree }
    }

    /// `[P_0(x), …, P_max(x)]` in one recurrence sweep.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.max_degree + 1);
        out.push(1.0);
        if self.max_degree == 0 {
            return out;
        }
        out.push(x);
        for j in 1..self.max_degree {
            let jf = j as f64;
            let next = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
            out.push(next);
        }
        out
    }

    pub fn eval(&self, k: usize, x: f64) -> Option<f64> {
        (k <= self.max_degree).then(|| legendre_eval(k, x))
    }
}

/// `L_k^θ(x) = (1/θ) P_k(x/θ)`.
///
/// The value is not truncated outside `[-θ, θ]`; callers that need compact
/// support do that themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilatedPolynomial {
    degree: usize,
    theta: f64,
}

impl DilatedPolynomial {
    pub fn new(degree: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation half-width must be positive, got {theta}"
            )));
        }
        Ok(Self { degree, theta })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eval(&self, x: f64) -> f64 {
        legendre_eval(self.degree, x / self.theta) / self.theta
    }

    /// `∫_{-θ}^{θ} (L_k^θ)² = (2/θ)/(2k+1)`.
    pub fn norm_squared(&self) -> f64 {
        (2.0 / self.theta) / (2 * self.degree + 1) as f64
    }
}
