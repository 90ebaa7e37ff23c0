use serde::Serialize;

use super::{check_positive, Kernel, KernelConstraints};
use crate::error::{Error, Result};
use crate::orthopoly::{legendre_coefficients, moment_mu};

const MAX_M: usize = 12;
const MAX_DERIV_DEGREE: usize = 24;

/// How the support half-width of a [`PolyKernel`] was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum PolyOrigin {
    /// `θ₀ = [1/(2m+1) − μ(2m)]^{−1/(2m)}`, solving `∫y^{2m}K = 1`.
    ClosedForm,
    /// `θ₀ = [1/(1 − μ(2m))]^{1/(2m)}` as printed; kept for comparison only.
    PrintedFormula,
    /// Derivative-estimation kernel with `θ = (2m+1)^{1/(2m)}`; `literal_theta`
    /// is `[1 − μ(2m+2r)]^{−1/(2m+2r)}`.
    Derivative { literal_theta: f64 },
    /// Built from explicit coefficients (e.g. a QP solution).
    Coefficients,
}

/// Even polynomial kernel on `[-θ, θ]`, stored as coefficients `c_k` of
/// `z^{2k}` with `z = y/θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyKernel {
    m: usize,
    r: usize,
    theta: f64,
    coeffs: Vec<f64>,
    #[serde(flatten)]
    origin: PolyOrigin,
}

/// `θ₀ = [1/(2m+1) − μ(2m)]^{−1/(2m)}`.
pub fn optimal_theta(m: usize) -> f64 {
    let e = 2 * m;
    let gap = 1.0 / (e + 1) as f64 - moment_mu(e).value;
    gap.powf(-1.0 / e as f64)
}

/// `[1/(1 − μ(2m))]^{1/(2m)}`, the printed form of the support formula.
pub fn printed_theta(m: usize) -> f64 {
    let e = 2 * m;
    (1.0 / (1.0 - moment_mu(e).value)).powf(1.0 / e as f64)
}

/// `(1/(2θ))·(4m+3)/(4m+1)`, the printed minimal value of `∫K²`.
pub fn printed_minimal_value(m: usize, theta: f64) -> f64 {
    let m = m as f64;
    (4.0 * m + 3.0) / (4.0 * m + 1.0) / (2.0 * theta)
}

/// Coefficients of `(1 − P_n(z))/(2θ)` in powers of `z²`, `n` even.
fn one_minus_legendre(n: usize, theta: f64) -> Vec<f64> {
    let p = legendre_coefficients(n);
    let scale = 0.5 / theta;
    (0..=n / 2)
        .map(|k| {
            let base = if k == 0 { 1.0 } else { 0.0 };
            scale * (base - p[2 * k])
        })
        .collect()
}

impl PolyKernel {
    /// Order-`2m` kernel `1/(2θ₀) − P_{2m}(y/θ₀)/(2θ₀)` on `[-θ₀, θ₀]`.
    pub fn optimal(m: usize) -> Result<Self> {
        Self::check_m(m)?;
        let theta = optimal_theta(m);
        Ok(Self {
            m,
            r: 0,
            theta,
            coeffs: one_minus_legendre(2 * m, theta),
            origin: PolyOrigin::ClosedForm,
        })
    }

    /// Same polynomial shape with the printed support formula.
    pub fn printed_formula(m: usize) -> Result<Self> {
        Self::check_m(m)?;
        let theta = printed_theta(m);
        Ok(Self {
            m,
            r: 0,
            theta,
            coeffs: one_minus_legendre(2 * m, theta),
            origin: PolyOrigin::PrintedFormula,
        })
    }

    /// Kernel for estimating the `r`-th derivative:
    /// `1/(2θ) − P_{2m+2r}(y/θ)/(2θ)` with `θ = (2m+1)^{1/(2m)}`, which makes
    /// `∫y^{2m}K = 1` hold (the Legendre term is orthogonal to `y^{2m}`).
    ///
    /// The even moments `2 ≤ l ≤ 2m−2` do not vanish for this shape; inspect
    /// [`super::moment_residuals`] before relying on them.
    pub fn derivative(m: usize, r: usize) -> Result<Self> {
        if m == 0 || r == 0 || 2 * m + 2 * r > MAX_DERIV_DEGREE {
            return Err(Error::OrderOutOfRange(format!(
                "derivative kernel needs m >= 1, r >= 1 and 2m + 2r <= {MAX_DERIV_DEGREE}, got m = {m}, r = {r}"
            )));
        }
        let e = 2 * m;
        let theta = ((e + 1) as f64).powf(1.0 / e as f64);
        let n = 2 * m + 2 * r;
        let literal_theta = (1.0 - moment_mu(n).value).powf(-1.0 / n as f64);
        Ok(Self {
            m,
            r,
            theta,
            coeffs: one_minus_legendre(n, theta),
            origin: PolyOrigin::Derivative { literal_theta },
        })
    }

    /// Kernel from coefficients of `z^{2k}`, `z = y/θ`.
    pub fn from_coefficients(m: usize, r: usize, theta: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_positive("theta", theta)?;
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "kernel coefficients must be finite and non-empty".into(),
            ));
        }
        Ok(Self {
            m,
            r,
            theta,
            coeffs,
            origin: PolyOrigin::Coefficients,
        })
    }

    fn check_m(m: usize) -> Result<()> {
        if (1..=MAX_M).contains(&m) {
            Ok(())
        } else {
            Err(Error::OrderOutOfRange(format!(
                "m must lie in 1..={MAX_M}, got {m}"
            )))
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn origin(&self) -> PolyOrigin {
        self.origin
    }

    /// Coefficients of `z^{2k}`, `z = y/θ`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients of `y^{2k}`.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let t2 = self.theta * self.theta;
        let mut scale = 1.0;
        self.coeffs
            .iter()
            .map(|c| {
                let v = c * scale;
                scale /= t2;
                v
            })
            .collect()
    }

    /// Polynomial degree in `y`.
    pub fn degree(&self) -> usize {
        2 * (self.coeffs.len() - 1)
    }

    pub fn constraints(&self) -> KernelConstraints {
        KernelConstraints::integer(self.m)
    }

    /// `(1/(2θ))·(4n+2)/(4n+1)` for the `1 − P_{2n}` shapes, from the Legendre
    /// norms; `None` for kernels built from arbitrary coefficients.
    pub fn v2_closed_form(&self) -> Option<f64> {
        match self.origin {
            PolyOrigin::Coefficients => None,
            _ => {
                let n = (self.m + self.r) as f64;
                Some((4.0 * n + 2.0) / (4.0 * n + 1.0) / (2.0 * self.theta))
            }
        }
    }

    /// Value of the polynomial on the closed support, without truncation.
    fn poly(&self, y: f64) -> f64 {
        let z = y / self.theta;
        let z2 = z * z;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z2 + c)
    }

    /// `K^{(r)}(y)`. Zero outside `[-θ, θ]`; at `±θ` the interior one-sided
    /// limit.
    pub fn eval_deriv(&self, order: usize, y: f64) -> f64 {
        if y.abs() > self.theta {
            return 0.0;
        }
        if order == 0 {
            return self.poly(y);
        }
        let z = y / self.theta;
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            let p = 2 * k;
            if p < order {
                continue;
            }
            let falling: f64 = ((p - order + 1)..=p).map(|i| i as f64).product();
            acc += c * falling * z.powi((p - order) as i32);
        }
        acc * self.theta.powi(-(order as i32))
    }
}

impl Kernel for PolyKernel {
    fn eval(&self, y: f64) -> f64 {
        if y.abs() > self.theta {
            0.0
        } else {
            self.poly(y)
        }
    }

    fn support(&self) -> f64 {
        self.theta
    }

    fn is_polynomial(&self) -> bool {
        true
    }
}
