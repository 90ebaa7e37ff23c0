use serde::Serialize;

/// Exponent of the moment normalised to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentOrder {
    /// `∫ y^{2m} K = 1`, stored as the even exponent `2m`.
    Integer(u32),
    /// `∫ |y|^β K = 1`.
    Fractional(f64),
}

impl MomentOrder {
    pub fn exponent(self) -> f64 {
        match self {
            MomentOrder::Integer(e) => e as f64,
            MomentOrder::Fractional(b) => b,
        }
    }
}

/// Linear moment constraints on a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConstraints {
    pub order: MomentOrder,
    /// Exponents `l` with `∫ y^l K = 0`.
    pub vanishing_moments: Vec<u32>,
    /// Fixed support half-width, or `None` when `θ` is determined by the
    /// normalisation.
    pub support_halfwidth: Option<f64>,
}

impl KernelConstraints {
    /// Order-`2m` problem: `∫K = 1`, `∫y^l K = 0` for `1 ≤ l ≤ 2m−1`, `∫y^{2m}K = 1`.
    pub fn integer(m: usize) -> Self {
        let order = 2 * m as u32;
        Self {
            order: MomentOrder::Integer(order),
            vanishing_moments: (1..order).collect(),
            support_halfwidth: None,
        }
    }

    /// Fractional problem: `∫K = 1`, `∫y^l K = 0` for integers `1 ≤ l < β`,
    /// `∫|y|^β K = 1`.
    pub fn fractional(beta: f64) -> Self {
        let top = beta.ceil() as u32;
        Self {
            order: MomentOrder::Fractional(beta),
            vanishing_moments: (1..top).collect(),
            support_halfwidth: None,
        }
    }

    pub fn with_support(mut self, theta: f64) -> Self {
        self.support_halfwidth = Some(theta);
        self
    }

    /// Mass row, vanishing rows in increasing order, then the normalisation row.
    pub fn rows(&self) -> Vec<MomentConstraint> {
        let mut rows = Vec::with_capacity(self.vanishing_moments.len() + 2);
        rows.push(MomentConstraint::Mass);
        rows.extend(
            self.vanishing_moments
                .iter()
                .map(|&l| MomentConstraint::Vanishing(l)),
        );
        rows.push(MomentConstraint::Normalization(self.order.exponent()));
        rows
    }

    /// Rows without the normalisation, i.e. the constraints a perturbation of
    /// a scale-free functional has to respect.
    pub fn rows_without_normalization(&self) -> Vec<MomentConstraint> {
        let mut rows = self.rows();
        rows.pop();
        rows
    }
}

/// One linear constraint `∫ w(y) K(y) dy = target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "exponent", rename_all = "snake_case")]
pub enum MomentConstraint {
    Mass,
    Vanishing(u32),
    Normalization(f64),
}

impl MomentConstraint {
    pub fn target(&self) -> f64 {
        match self {
            MomentConstraint::Mass | MomentConstraint::Normalization(_) => 1.0,
            MomentConstraint::Vanishing(_) => 0.0,
        }
    }

    pub fn weight(&self, y: f64) -> f64 {
        match *self {
            MomentConstraint::Mass => 1.0,
            MomentConstraint::Vanishing(l) => y.powi(l as i32),
            MomentConstraint::Normalization(e) => y.abs().powf(e),
        }
    }

    /// Exponent of the weight, `0` for the mass row.
    pub fn exponent(&self) -> f64 {
        match *self {
            MomentConstraint::Mass => 0.0,
            MomentConstraint::Vanishing(l) => l as f64,
            MomentConstraint::Normalization(e) => e,
        }
    }

    /// Whether `w(y)` is a polynomial (so the integrand stays smooth against a
    /// polynomial kernel).
    pub fn is_polynomial(&self) -> bool {
        match *self {
            MomentConstraint::Mass | MomentConstraint::Vanishing(_) => true,
            MomentConstraint::Normalization(e) => e.fract() == 0.0 && (e as u64).is_multiple_of(2),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            MomentConstraint::Mass => "int K = 1".to_string(),
            MomentConstraint::Vanishing(l) => format!("int y^{l} K = 0"),
            MomentConstraint::Normalization(e) => format!("int |y|^{e} K = 1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResidual {
    pub constraint: MomentConstraint,
    pub target: f64,
    pub value: f64,
    pub residual: f64,
}

impl MomentResidual {
    pub fn new(constraint: MomentConstraint, value: f64) -> Self {
        let target = constraint.target();
        Self {
            constraint,
            target,
            value,
            residual: value - target,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_rows() {
        let c = KernelConstraints::integer(2);
        assert_eq!(c.vanishing_moments, vec![1, 2, 3]);
        let rows = c.rows();
        assert_eq!(rows.first(), Some(&MomentConstraint::Mass));
        assert_eq!(rows.last(), Some(&MomentConstraint::Normalization(4.0)));
        assert!(rows.iter().all(MomentConstraint::is_polynomial));
    }

    #[test]
    fn fractional_rows() {
        assert_eq!(
            KernelConstraints::fractional(1.5).vanishing_moments,
            vec![1]
        );
        assert_eq!(
            KernelConstraints::fractional(2.5).vanishing_moments,
            vec![1, 2]
        );
        assert_eq!(
            KernelConstraints::fractional(2.0).vanishing_moments,
            vec![1]
        );
        assert_eq!(
            KernelConstraints::fractional(0.5).vanishing_moments,
            Vec::<u32>::new()
        );
        assert!(!MomentConstraint::Normalization(1.5).is_polynomial());
        assert!(!MomentConstraint::Normalization(1.0).is_polynomial());
    }
}
