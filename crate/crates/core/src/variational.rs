//! Independent numerical oracle for the kernel optimisation problems.
//!
//! A kernel on `[-θ, θ]` is written as an even polynomial
//! `K(y) = Σ_k c_k z^{2k}`, `z = y/θ`. Minimising `∫(K^{(r)})²` under linear
//! moment constraints is then a finite-dimensional equality-constrained QP,
//! solved exactly through its KKT system. Nothing here uses Legendre
//! polynomials: moments of monomials are integrated in closed form, so the
//! results can be compared against the closed-form kernels without sharing
//! any code path with them.
//!
//! [`PerturbationTest`] probes optimality from the other side: it perturbs a
//! given kernel along random feasible directions and reports the largest
//! relative decrease of the objective.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{
    j_beta, max_abs_residual, support_integral, v2, AnyKernel, Kernel, KernelConstraints,
    MomentConstraint, MomentResidual, PolyKernel,
};
use crate::quadrature::{default_rule, split_rule, PointSet, GRADING_LEVELS};

const MAX_DEGREE: usize = 40;
const RANK_TOL: f64 = 1e-13;
const BISECTION_TOL: f64 = 1e-12;
const THETA_BRACKET: (f64, f64) = (0.5, 10.0);

fn falling(p: usize, r: usize) -> f64 {
    ((p - r + 1)..=p).map(|i| i as f64).product()
}

/// `∫_{-θ}^{θ} (d^r y^i)(d^r y^j) dy` over even exponents `i, j ∈ {0, 2, …, D}`.
pub fn gram_matrix(degree: usize, r: usize, theta: f64) -> Result<DMatrix<f64>> {
    if degree % 2 == 1 || degree > MAX_DEGREE {
        return Err(Error::OrderOutOfRange(format!(
            "ansatz degree must be even and at most {MAX_DEGREE}, got {degree}"
        )));
    }
    let n = degree / 2 + 1;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (2 * a, 2 * b);
        if r > i.min(j) {
            return 0.0;
        }
        let p = i + j - 2 * r;
        falling(i, r) * falling(j, r) * 2.0 * theta.powi(p as i32 + 1) / (p + 1) as f64
    }))
}

/// `min ∫(K^{(r)})²` over even polynomials of degree `D` on `[-θ, θ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedKernelProblem {
    pub poly_degree: usize,
    pub objective_order: usize,
    pub theta: f64,
    pub constraints: KernelConstraints,
    /// Include the `∫|y|^{order} K = 1` row.
    pub normalization: bool,
    /// Add the continuity row `K(±θ) = 0`.
    pub boundary_zero: bool,
}

impl ConstrainedKernelProblem {
    pub fn new(
        poly_degree: usize,
        objective_order: usize,
        theta: f64,
        constraints: KernelConstraints,
    ) -> Self {
        Self {
            poly_degree,
            objective_order,
            theta,
            constraints,
            normalization: true,
            boundary_zero: false,
        }
    }

    pub fn with_boundary_zero(mut self) -> Self {
        self.boundary_zero = true;
        self
    }

    pub fn without_normalization(mut self) -> Self {
        self.normalization = false;
        self
    }

    /// Active rows in the normalised variable, with their right-hand sides.
    /// Odd moments vanish identically on the even ansatz and are dropped.
    fn rows(&self) -> (Vec<String>, DMatrix<f64>, DVector<f64>) {
        let n = self.poly_degree / 2 + 1;
        let mut moment_rows = if self.normalization {
            self.constraints.rows()
        } else {
            self.constraints.rows_without_normalization()
        };
        moment_rows.retain(|c| !matches!(c, MomentConstraint::Vanishing(l) if l % 2 == 1));

        let mut labels = Vec::new();
        let mut entries = Vec::new();
        let mut rhs = Vec::new();
        for c in &moment_rows {
            // ∫ |y|^e (y/θ)^{2k} dy = θ^{e+1}·2/(e+2k+1); rows are divided by θ^{e+1}
            let e = c.exponent();
            labels.push(c.label());
            entries.extend((0..n).map(|k| 2.0 / (e + (2 * k) as f64 + 1.0)));
            rhs.push(c.target() / self.theta.powf(e + 1.0));
        }
        if self.boundary_zero {
            labels.push("K(theta) = 0".into());
            entries.extend(std::iter::repeat_n(1.0, n));
            rhs.push(0.0);
        }
        let rows = labels.len();
        (
            labels,
            DMatrix::from_row_slice(rows, n, &entries),
            DVector::from_vec(rhs),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpSolution {
    pub theta: f64,
    /// Coefficients of `(y/θ)^{2k}`.
    pub coefficients: Vec<f64>,
    /// One multiplier per active constraint, for the normalised system.
    pub multipliers: Vec<f64>,
    pub active_constraints: Vec<String>,
    /// `∫(K^{(r)})²`.
    pub objective_value: f64,
    /// Max-norm of the stationarity and feasibility residuals.
    pub kkt_residual: f64,
}

impl QpSolution {
    /// Wraps the solution as a kernel (for evaluation, moments, estimation).
    pub fn to_kernel(&self, m: usize, r: usize) -> Result<PolyKernel> {
        PolyKernel::from_coefficients(m, r, self.theta, self.coefficients.clone())
    }

    /// `∫ y^p K(y) dy` for even `p`, from the coefficients.
    pub fn even_moment(&self, p: usize) -> f64 {
        let s: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * 2.0 / (p + 2 * k + 1) as f64)
            .sum();
        s * self.theta.powi(p as i32 + 1)
    }
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    let cutoff = max * RANK_TOL * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Solves the KKT system `[2G Aᵀ; A 0][c; ν] = [0; b]` of the problem.
pub fn solve_kernel_qp(problem: &ConstrainedKernelProblem) -> Result<QpSolution> {
    if !(problem.theta > 0.0 && problem.theta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {}",
            problem.theta
        )));
    }
    let gram = gram_matrix(problem.poly_degree, problem.objective_order, 1.0)?;
    let (labels, a, b) = problem.rows();
    let n = gram.nrows();
    let q = a.nrows();
    let size = n + q;

    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(&gram * 2.0));
    kkt.view_mut((0, n), (n, q)).copy_from(&a.transpose());
    kkt.view_mut((n, 0), (q, n)).copy_from(&a);
    let mut rhs = DVector::zeros(size);
    rhs.rows_mut(n, q).copy_from(&b);

    let rank = numerical_rank(&kkt);
    if rank < size {
        return Err(Error::RankDeficient { rank, size });
    }
    let lu = kkt.clone().full_piv_lu();
    let mut x = lu.solve(&rhs).ok_or(Error::RankDeficient { rank, size })?;
    let correction = lu
        .solve(&(&rhs - &kkt * &x))
        .ok_or(Error::RankDeficient { rank, size })?;
    x += correction;

    let c = x.rows(0, n).into_owned();
    let multipliers: Vec<f64> = x.rows(n, q).iter().map(|v| -v).collect();
    let stationarity = &gram * &c * 2.0 + a.transpose() * x.rows(n, q);
    let feasibility = &a * &c - &b;
    let kkt_residual = stationarity
        .amax()
        .max(if q > 0 { feasibility.amax() } else { 0.0 });
    let scale = problem.theta.powi(1 - 2 * problem.objective_order as i32);
    let objective_value = scale * (c.transpose() * &gram * &c)[(0, 0)];

    Ok(QpSolution {
        theta: problem.theta,
        coefficients: c.iter().copied().collect(),
        multipliers,
        active_constraints: labels,
        objective_value,
        kkt_residual,
    })
}

/// Finds `θ` such that the QP solution without the `y^{2m}` row, but with
/// `K(±θ) = 0`, has `∫y^{2m}K = 1`. Bisection on `[0.5, 10]`.
pub fn solve_with_free_theta(m: usize, r: usize) -> Result<(f64, QpSolution)> {
    if m == 0 {
        return Err(Error::OrderOutOfRange("m must be at least 1".into()));
    }
    let degree = 2 * m + 2 * r;
    let constraints = KernelConstraints::integer(m);
    let solve = |theta: f64| {
        let problem = ConstrainedKernelProblem::new(degree, r, theta, constraints.clone())
            .without_normalization()
            .with_boundary_zero();
        solve_kernel_qp(&problem)
    };
    let excess = |theta: f64| -> Result<f64> { Ok(solve(theta)?.even_moment(2 * m) - 1.0) };

    let (mut lo, mut hi) = THETA_BRACKET;
    let mut f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = excess(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    Ok((theta, solve(theta)?))
}

/// Minimiser of `∫(K^{(r)})²` over even polynomials of degree `2m+2r` on the
/// support of [`PolyKernel::derivative`], under the full order-`2m`
/// constraint set plus continuity at `±θ`.
pub fn derivative_kernel_qp(m: usize, r: usize) -> Result<QpSolution> {
    let reference = PolyKernel::derivative(m, r)?;
    let problem = ConstrainedKernelProblem::new(
        2 * m + 2 * r,
        r,
        reference.theta(),
        KernelConstraints::integer(m),
    )
    .with_boundary_zero();
    solve_kernel_qp(&problem)
}

/// `Φ(K) = J_β(K)²·V₂(K)^{2β}`: the kernel-dependent factor of the
/// bandwidth-optimised mean squared error, invariant under `K(y) → K(y/s)/s`.
pub fn phi_functional<K: Kernel + ?Sized>(kernel: &K, beta: f64) -> Result<f64> {
    let j = j_beta(kernel, beta);
    if j <= 0.0 || !j.is_finite() {
        return Err(Error::DegenerateMoment(j));
    }
    Ok(j * j * v2(kernel).powf(2.0 * beta))
}

/// Functional probed by [`PerturbationTest`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    V2,
    Phi { beta: f64 },
}

/// Random feasible perturbations `K + δg` of a kernel.
///
/// `g` is a random combination of even monomials `(y/θ_p)^{2j}` (and
/// optionally `|y/θ_p|^β`) on the perturbation domain `[-θ_p, θ_p]`,
/// projected so that every listed constraint is preserved exactly, then
/// scaled to `‖g‖₂ = ‖K‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationTest {
    pub objective: Objective,
    pub constraints: Vec<MomentConstraint>,
    pub support: f64,
    pub poly_terms: usize,
    pub extra_power: Option<f64>,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub trials: usize,
    pub objective: Objective,
    pub objective_value: f64,
    /// Most negative `(F(K+δg) − F(K))/F(K)` observed.
    pub worst_relative_change: f64,
    /// Largest moment residual of the unperturbed kernel on the preserved rows.
    pub feasibility_residual: f64,
}

impl PerturbationTest {
    /// `V₂` under all rows of `constraints`, perturbing on `[-support, support]`.
    pub fn v2(constraints: &KernelConstraints, support: f64) -> Self {
        Self {
            objective: Objective::V2,
            constraints: constraints.rows(),
            support,
            poly_terms: 8,
            extra_power: None,
            deltas: vec![1e-2, -1e-2, 1e-3, -1e-3],
        }
    }

    /// `Φ` with exponent `beta`; the normalisation row is dropped since `Φ`
    /// is scale invariant.
    pub fn phi(beta: f64, constraints: &KernelConstraints, support: f64) -> Self {
        Self {
            objective: Objective::Phi { beta },
            constraints: constraints.rows_without_normalization(),
            support,
            poly_terms: 8,
            extra_power: Some(beta),
            deltas: vec![1e-2, -1e-2, 1e-3, -1e-3],
        }
    }

    pub fn with_extra_power(mut self, power: f64) -> Self {
        self.extra_power = Some(power);
        self
    }

    fn basis(&self, j: usize, y: f64) -> f64 {
        let z = y / self.support;
        if j < self.poly_terms {
            z.powi(2 * j as i32)
        } else {
            z.abs().powf(self.extra_power.unwrap_or(0.0))
        }
    }

    fn basis_exponent(&self, j: usize) -> f64 {
        if j < self.poly_terms {
            (2 * j) as f64
        } else {
            self.extra_power.unwrap_or(0.0)
        }
    }

    fn basis_len(&self) -> usize {
        self.poly_terms + usize::from(self.extra_power.is_some())
    }

    /// Orthonormal basis of the null space of the constraint map on basis
    /// coefficients (columns).
    fn feasible_directions(&self) -> DMatrix<f64> {
        let p = self.basis_len();
        let rows: Vec<&MomentConstraint> = self
            .constraints
            .iter()
            .filter(|c| !matches!(c, MomentConstraint::Vanishing(l) if l % 2 == 1))
            .collect();
        if rows.is_empty() {
            return DMatrix::identity(p, p);
        }
        // ∫ |y|^e |y/θ_p|^s dy = 2 θ_p^{e+1}/(e+s+1)
        let a = DMatrix::from_fn(rows.len(), p, |i, j| {
            let e = rows[i].exponent();
            2.0 * self.support.powf(e + 1.0) / (e + self.basis_exponent(j) + 1.0)
        });
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("right singular vectors");
        let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > max * 1e-12)
            .count();
        // complete the row space to an orthonormal basis of R^p and keep the rest
        let row_space = vt.rows(0, rank).transpose();
        let projector = DMatrix::identity(p, p) - &row_space * row_space.transpose();
        let sym = (&projector + projector.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let keep: Vec<usize> = (0..p).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        DMatrix::from_fn(p, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
    }

    fn points(&self, kernel_support: f64) -> PointSet {
        if kernel_support < self.support {
            let mut inner =
                PointSet::graded_symmetric(split_rule(), kernel_support, GRADING_LEVELS);
            let left = PointSet::mapped(default_rule(), -self.support, -kernel_support);
            let right = PointSet::mapped(default_rule(), kernel_support, self.support);
            inner
                .nodes
                .extend(left.nodes.into_iter().chain(right.nodes));
            inner
                .weights
                .extend(left.weights.into_iter().chain(right.weights));
            inner
        } else {
            PointSet::graded_symmetric(split_rule(), self.support, GRADING_LEVELS)
        }
    }

    pub fn run<K: Kernel + ?Sized>(
        &self,
        kernel: &K,
        trials: usize,
        seed: u64,
    ) -> Result<PerturbationReport> {
        let directions = self.feasible_directions();
        if directions.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "constraints leave no feasible perturbation direction".into(),
            ));
        }
        let points = self.points(kernel.support());
        let p = self.basis_len();
        // basis values and kernel values at the cubature nodes
        let basis_at: Vec<Vec<f64>> = points
            .nodes
            .iter()
            .map(|&y| (0..p).map(|j| self.basis(j, y)).collect())
            .collect();
        let k_at: Vec<f64> = points.nodes.iter().map(|&y| kernel.eval(y)).collect();

        let v0 = v2(kernel);
        let (objective_value, j0, beta) = match self.objective {
            Objective::V2 => (v0, 0.0, 0.0),
            Objective::Phi { beta } => (phi_functional(kernel, beta)?, j_beta(kernel, beta), beta),
        };
        let feasibility_residual = self.feasibility(kernel);

        let worst = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial as u64);
                let raw = DVector::from_fn(directions.ncols(), |_, _| rng.random_range(-1.0..=1.0));
                let coeffs = &directions * raw;
                let g: Vec<f64> = basis_at
                    .iter()
                    .map(|b| b.iter().zip(coeffs.iter()).map(|(x, c)| x * c).sum())
                    .collect();

                let mut kg = 0.0;
                let mut gg = 0.0;
                let mut jg = 0.0;
                for (i, w) in points.weights.iter().enumerate() {
                    kg += w * k_at[i] * g[i];
                    gg += w * g[i] * g[i];
                    if beta > 0.0 {
                        jg += w * points.nodes[i].abs().powf(beta) * g[i];
                    }
                }
                if gg == 0.0 {
                    return 0.0;
                }
                let s = (v0 / gg).sqrt();
                let (kg, gg, jg) = (kg * s, v0, jg * s);

                self.deltas
                    .iter()
                    .map(|&d| {
                        let dv = (2.0 * d * kg + d * d * gg) / v0;
                        match self.objective {
                            Objective::V2 => dv,
                            Objective::Phi { beta } => {
                                let log_change =
                                    2.0 * (d * jg / j0).ln_1p() + 2.0 * beta * dv.ln_1p();
                                log_change.exp_m1()
                            }
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min);

        Ok(PerturbationReport {
            trials,
            objective: self.objective,
            objective_value,
            worst_relative_change: if trials == 0 { 0.0 } else { worst },
            feasibility_residual,
        })
    }

    fn feasibility<K: Kernel + ?Sized>(&self, kernel: &K) -> f64 {
        let residuals: Vec<MomentResidual> = self
            .constraints
            .iter()
            .map(|&c| {
                let smooth = kernel.is_polynomial() && c.is_polynomial();
                MomentResidual::new(
                    c,
                    support_integral(kernel, smooth, |y| c.weight(y) * kernel.eval(y)),
                )
            })
            .collect();
        max_abs_residual(&residuals)
    }
}

/// `V₂` perturbation test with the kernel's own constraints and support; the
/// basis gains `|y/θ|^β` for fractional kernels.
pub fn perturbation_test(
    kernel: &AnyKernel,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let mut test = PerturbationTest::v2(&kernel.constraints(), kernel.support());
    if let AnyKernel::Frac(k) = kernel {
        test = test.with_extra_power(k.beta());
    }
    test.run(kernel, trials, seed)
}

/// Machine-readable summary of one oracle run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub problem: String,
    pub theta: f64,
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub worst_perturbation_decrease: Option<f64>,
}

impl OracleReport {
    pub fn new(problem: impl Into<String>, solution: &QpSolution, worst: Option<f64>) -> Self {
        Self {
            problem: problem.into(),
            theta: solution.theta,
            coefficients: solution.coefficients.clone(),
            objective: solution.objective_value,
            kkt_residual: solution.kkt_residual,
            worst_perturbation_decrease: worst,
        }
    }
}
