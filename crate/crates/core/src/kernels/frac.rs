use serde::Serialize;

use super::{check_positive, Kernel, KernelConstraints};
use crate::error::{Error, Result};

/// `K(y) = λ − μ|y|^β` on `[-θ, θ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracKernel {
    beta: f64,
    theta: f64,
    lambda: f64,
    mu: f64,
}

impl FracKernel {
    /// Minimiser of `∫K²` under `∫K = 1`, `∫|y|^β K = 1`:
    /// `θ₀ = (2β+1)^{1/β}`, `λ = ((β+1)/(2β))(2β+1)^{−1/β}`,
    /// `μ = ((β+1)/(2β))(2β+1)^{−(β+1)/β}`.
    pub fn optimal(beta: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        let base = 2.0 * beta + 1.0;
        let lead = (beta + 1.0) / (2.0 * beta);
        Ok(Self {
            beta,
            theta: base.powf(1.0 / beta),
            lambda: lead * base.powf(-1.0 / beta),
            mu: lead * base.powf(-(beta + 1.0) / beta),
        })
    }

    /// Arbitrary `λ − μ|y|^β` truncated at `θ`.
    pub fn new(beta: f64, theta: f64, lambda: f64, mu: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("theta", theta)?;
        if !(lambda.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(
                "lambda and mu must be finite".into(),
            ));
        }
        Ok(Self {
            beta,
            theta,
            lambda,
            mu,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn constraints(&self) -> KernelConstraints {
        KernelConstraints::fractional(self.beta)
    }

    /// `∫K² = 2[λ²θ − 2λμθ^{β+1}/(β+1) + μ²θ^{2β+1}/(2β+1)]`.
    pub fn v2_closed_form(&self) -> f64 {
        let (b, t, l, m) = (self.beta, self.theta, self.lambda, self.mu);
        2.0 * (l * l * t - 2.0 * l * m * t.powf(b + 1.0) / (b + 1.0)
            + m * m * t.powf(2.0 * b + 1.0) / (2.0 * b + 1.0))
    }

    /// `(β+1)(2β+1)^{−(β+1)/β}`, the minimum of `∫K²` reached by [`Self::optimal`].
    pub fn minimal_value(beta: f64) -> f64 {
        (beta + 1.0) * (2.0 * beta + 1.0).powf(-(beta + 1.0) / beta)
    }

    /// `K'(y) = −μβ|y|^{β−1} sign(y)`; zero at the origin by symmetry and
    /// outside the support. Higher orders are rejected because `|y|^β` has no
    /// classical second derivative at zero for `β < 2`.
    pub fn eval_deriv(&self, order: usize, y: f64) -> Result<f64> {
        match order {
            0 => Ok(self.eval(y)),
            1 => {
                if y.abs() > self.theta || y == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(-self.mu * self.beta * y.abs().powf(self.beta - 1.0) * y.signum())
                }
            }
            _ => Err(Error::UnsupportedDerivative {
                order,
                kernel: "fractional",
            }),
        }
    }
}

impl Kernel for FracKernel {
    fn eval(&self, y: f64) -> f64 {
        if y.abs() > self.theta {
            0.0
        } else {
            self.lambda - self.mu * y.abs().powf(self.beta)
        }
    }

    fn support(&self) -> f64 {
        self.theta
    }

    fn is_polynomial(&self) -> bool {
        false
    }
}
