//! Optimal compactly supported kernels.
//!
//! Three closed-form families are provided:
//!
//! * [`PolyKernel::optimal`]: the order-`2m` kernel `1/(2θ₀) − P_{2m}(y/θ₀)/(2θ₀)`,
//! * [`FracKernel::optimal`]: the fractional-order kernel `λ − μ|y|^β`,
//! * [`PolyKernel::derivative`]: the kernel used for estimating `f^{(r)}`.
//!
//! Moments and norms are always computed by Gauss–Legendre quadrature so that
//! the closed forms can be checked against something independent of them.

mod constraints;
mod export;
mod frac;
mod poly;
mod product;

pub use constraints::{KernelConstraints, MomentConstraint, MomentOrder, MomentResidual};
pub use export::{kernel_table, Discrepancy, KernelDescriptor};
pub use frac::FracKernel;
pub use poly::{optimal_theta, printed_minimal_value, printed_theta, PolyKernel, PolyOrigin};
pub use product::ProductKernel;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{default_rule, integrate, split_rule, PointSet, GRADING_LEVELS};

/// An even kernel supported on `[-θ, θ]`.
pub trait Kernel: Send + Sync {
    /// Kernel value; exactly zero for `|y| > θ`.
    fn eval(&self, y: f64) -> f64;

    /// Support half-width `θ`.
    fn support(&self) -> f64;

    /// Whether the kernel is a polynomial on its support (smooth integrands
    /// can then use a single rule over the whole support).
    fn is_polynomial(&self) -> bool;
}

/// `∫_{-θ}^{θ} f(y) dy` over the kernel's support.
///
/// Smooth integrands use one 64-node rule; otherwise the support is split at
/// zero and each half is graded geometrically towards the kink, with 128
/// nodes per piece.
pub fn support_integral<K, F>(kernel: &K, smooth: bool, f: F) -> f64
where
    K: Kernel + ?Sized,
    F: Fn(f64) -> f64,
{
    let theta = kernel.support();
    if smooth {
        integrate(f, -theta, theta, default_rule())
    } else {
        PointSet::graded_symmetric(split_rule(), theta, GRADING_LEVELS).sum(f)
    }
}

/// `V₂(K) = ∫K²`, by quadrature.
pub fn v2<K: Kernel + ?Sized>(kernel: &K) -> f64 {
    support_integral(kernel, kernel.is_polynomial(), |y| kernel.eval(y).powi(2))
}

/// `J_β(K) = ∫|y|^β K(y) dy`, by quadrature split at zero.
pub fn j_beta<K: Kernel + ?Sized>(kernel: &K, beta: f64) -> f64 {
    support_integral(kernel, false, |y| y.abs().powf(beta) * kernel.eval(y))
}

/// Quadrature value minus target for every row of `constraints`.
pub fn moment_residuals<K: Kernel + ?Sized>(
    kernel: &K,
    constraints: &KernelConstraints,
) -> Vec<MomentResidual> {
    constraints
        .rows()
        .into_iter()
        .map(|row| {
            let smooth = kernel.is_polynomial() && row.is_polynomial();
            let value = support_integral(kernel, smooth, |y| row.weight(y) * kernel.eval(y));
            MomentResidual::new(row, value)
        })
        .collect()
}

/// Largest absolute residual, or zero for an empty list.
pub fn max_abs_residual(residuals: &[MomentResidual]) -> f64 {
    residuals
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max)
}

/// Either kernel family, for code that dispatches at runtime (CLI, estimators).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnyKernel {
    Poly(PolyKernel),
    Frac(FracKernel),
}

impl AnyKernel {
    /// `K^{(r)}(y)`. Fractional kernels only have a first derivative.
    pub fn eval_deriv(&self, r: usize, y: f64) -> Result<f64> {
        match self {
            AnyKernel::Poly(k) => Ok(k.eval_deriv(r, y)),
            AnyKernel::Frac(k) => k.eval_deriv(r, y),
        }
    }

    /// The constraint set the kernel was built for.
    pub fn constraints(&self) -> KernelConstraints {
        match self {
            AnyKernel::Poly(k) => k.constraints(),
            AnyKernel::Frac(k) => k.constraints(),
        }
    }

    /// The smoothness exponent the kernel is normalised against (`2m` or `β`).
    pub fn order(&self) -> f64 {
        match self {
            AnyKernel::Poly(k) => (2 * k.m()) as f64,
            AnyKernel::Frac(k) => k.beta(),
        }
    }

    pub fn descriptor(&self) -> KernelDescriptor {
        match self {
            AnyKernel::Poly(k) => KernelDescriptor::for_poly(k),
            AnyKernel::Frac(k) => KernelDescriptor::for_frac(k),
        }
    }

    pub fn as_poly(&self) -> Option<&PolyKernel> {
        match self {
            AnyKernel::Poly(k) => Some(k),
            AnyKernel::Frac(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyKernel::Poly(_) => "polynomial",
            AnyKernel::Frac(_) => "fractional",
        }
    }
}

impl Kernel for AnyKernel {
    fn eval(&self, y: f64) -> f64 {
        match self {
            AnyKernel::Poly(k) => k.eval(y),
            AnyKernel::Frac(k) => k.eval(y),
        }
    }

    fn support(&self) -> f64 {
        match self {
            AnyKernel::Poly(k) => k.support(),
            AnyKernel::Frac(k) => k.support(),
        }
    }

    fn is_polynomial(&self) -> bool {
        matches!(self, AnyKernel::Poly(_))
    }
}

impl From<PolyKernel> for AnyKernel {
    fn from(k: PolyKernel) -> Self {
        AnyKernel::Poly(k)
    }
}

impl From<FracKernel> for AnyKernel {
    fn from(k: FracKernel) -> Self {
        AnyKernel::Frac(k)
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, y: f64) -> f64 {
        (**self).eval(y)
    }

    fn support(&self) -> f64 {
        (**self).support()
    }

    fn is_polynomial(&self) -> bool {
        (**self).is_polynomial()
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn j_beta_examples() {
        let epa = PolyKernel::optimal(1).unwrap();
        assert_abs_diff_eq!(j_beta(&epa, 2.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j_beta(&epa, 0.0), 1.0, epsilon = 1e-12);
        let frac = FracKernel::optimal(1.5).unwrap();
        assert_abs_diff_eq!(j_beta(&frac, 1.5), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn v2_examples() {
        let target = 3.0 / (5.0 * 5f64.sqrt());
        assert_abs_diff_eq!(
            v2(&PolyKernel::optimal(1).unwrap()),
            target,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            v2(&FracKernel::optimal(2.0).unwrap()),
            target,
            epsilon = 1e-12
        );
        // (β+1)(2β+1)^{−(β+1)/β} at β = 3/2
        let v = v2(&FracKernel::optimal(1.5).unwrap());
        assert_abs_diff_eq!(v, 2.5 * 4f64.powf(-5.0 / 3.0), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.248_031_5, epsilon = 1e-7);
    }

    #[test]
    fn any_kernel_dispatch() {
        let k: AnyKernel = FracKernel::optimal(1.5).unwrap().into();
        assert!(!k.is_polynomial());
        assert!(k.eval_deriv(2, 0.3).is_err());
        assert!(k.eval_deriv(1, 0.3).is_ok());
        let p: AnyKernel = PolyKernel::optimal(2).unwrap().into();
        assert!(p.is_polynomial());
        assert_eq!(p.order(), 4.0);
        assert!(p.eval_deriv(3, 0.1).is_ok());
    }
}
