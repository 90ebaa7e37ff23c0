//! Text table and JSON descriptor for constructed kernels.

use std::fmt::Write as _;

use serde::Serialize;

use super::{moment_residuals, v2, FracKernel, Kernel, MomentResidual, PolyKernel, PolyOrigin};
use crate::numfmt::sci;

/// Residuals above this are listed as violated in the descriptor.
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelDescriptor {
    #[serde(rename = "type")]
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub theta: f64,
    /// Coefficients of `(y/θ)^{2k}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Coefficients of `y^{2k}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monomial_coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub v2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v2_closed_form: Option<f64>,
    pub moment_residuals: Vec<MomentResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<Discrepancy>,
}

/// Where a kernel departs from the constraint set it nominally solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    /// Support half-width given by the printed formula, when it differs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_theta: Option<f64>,
    pub violated_constraints: Vec<String>,
    pub note: String,
}

fn violated(residuals: &[MomentResidual]) -> Vec<String> {
    residuals
        .iter()
        .filter(|r| r.residual.abs() > RESIDUAL_TOL)
        .map(|r| format!("{} (residual {})", r.constraint.label(), r.residual))
        .collect()
}

impl KernelDescriptor {
    pub fn for_poly(kernel: &PolyKernel) -> Self {
        let residuals = moment_residuals(kernel, &kernel.constraints());
        let bad = violated(&residuals);
        let discrepancy = match kernel.origin() {
            PolyOrigin::Derivative { literal_theta } => Some(Discrepancy {
                literal_theta: Some(literal_theta),
                violated_constraints: bad,
                note: "theta solves int y^{2m} K = 1 directly; the printed support formula is reported alongside"
                    .into(),
            }),
            PolyOrigin::PrintedFormula => Some(Discrepancy {
                literal_theta: Some(kernel.theta()),
                violated_constraints: bad,
                note: "support taken from the printed formula [1/(1 - mu(2m))]^{1/(2m)}".into(),
            }),
            _ if !bad.is_empty() => Some(Discrepancy {
                literal_theta: None,
                violated_constraints: bad,
                note: "the 1 - P_2m shape leaves the even moments below 2m nonzero".into(),
            }),
            _ => None,
        };
        let kind = match kernel.origin() {
            PolyOrigin::Derivative { .. } => "derivative",
            _ => "polynomial",
        };
        Self {
            kind,
            m: Some(kernel.m()),
            beta: None,
            r: Some(kernel.r()),
            theta: kernel.theta(),
            coefficients: Some(kernel.coefficients().to_vec()),
            monomial_coefficients: Some(kernel.monomial_coefficients()),
            lambda: None,
            mu: None,
            v2: v2(kernel),
            v2_closed_form: kernel.v2_closed_form(),
            moment_residuals: residuals,
            discrepancy,
        }
    }

    pub fn for_frac(kernel: &FracKernel) -> Self {
        let residuals = moment_residuals(kernel, &kernel.constraints());
        let bad = violated(&residuals);
        let discrepancy = (!bad.is_empty()).then(|| Discrepancy {
            literal_theta: None,
            violated_constraints: bad,
            note: "lambda - mu |y|^beta cannot satisfy vanishing even moments".into(),
        });
        Self {
            kind: "fractional",
            m: None,
            beta: Some(kernel.beta()),
            r: None,
            theta: kernel.theta(),
            coefficients: None,
            monomial_coefficients: None,
            lambda: Some(kernel.lambda()),
            mu: Some(kernel.mu()),
            v2: v2(kernel),
            v2_closed_form: Some(kernel.v2_closed_form()),
            moment_residuals: residuals,
            discrepancy,
        }
    }
}

/// `y<TAB>K(y)` on `points` equally spaced points of `[-θ, θ]`, with a header line.
pub fn kernel_table<K: Kernel + ?Sized>(kernel: &K, points: usize) -> String {
    let theta = kernel.support();
    let mut out = String::from("y\tK(y)\n");
    let points = points.max(2);
    for i in 0..points {
        let y = if i + 1 == points {
            theta
        } else {
            -theta + 2.0 * theta * i as f64 / (points - 1) as f64
        };
        let _ = writeln!(out, "{}\t{}", sci(y), sci(kernel.eval(y)));
    }
    out
}
