//! Cross-module properties: closed forms against the QP oracle, perturbation
//! tests, and the estimators against the kernels they use.

use approx::assert_abs_diff_eq;
use optkern::estimator::{
    parzen_rosenblatt, uniform_grid, BandwidthRule, Dataset, MiseExperiment, TargetDensity,
};
use optkern::kernels::v2;
use optkern::variational::{
    perturbation_test, solve_kernel_qp, solve_with_free_theta, ConstrainedKernelProblem,
    PerturbationTest,
};
use optkern::{AnyKernel, FracKernel, Kernel, KernelConstraints, PolyKernel};
use proptest::prelude::*;

fn all_kernels() -> Vec<AnyKernel> {
    let mut ks: Vec<AnyKernel> = (1..=6)
        .map(|m| PolyKernel::optimal(m).unwrap().into())
        .collect();
    ks.push(PolyKernel::derivative(2, 1).unwrap().into());
    ks.push(PolyKernel::derivative(1, 2).unwrap().into());
    for beta in [0.5, 1.0, 1.5, 2.0, 2.5] {
        ks.push(FracKernel::optimal(beta).unwrap().into());
    }
    ks
}

#[test]
fn kernels_vanish_at_the_support_edge() {
    for k in all_kernels() {
        let t = k.support();
        assert!(k.eval(t).abs() < 1e-12, "{k:?}");
        assert!(k.eval(-t).abs() < 1e-12, "{k:?}");
        assert_eq!(k.eval(t * 1.0001), 0.0);
    }
}

#[test]
fn fractional_beta_two_is_epanechnikov() {
    let f = FracKernel::optimal(2.0).unwrap();
    let p = PolyKernel::optimal(1).unwrap();
    for y in uniform_grid(-2.5, 2.5, 1001).unwrap() {
        assert_abs_diff_eq!(f.eval(y), p.eval(y), epsilon = 1e-12);
    }
}

#[test]
fn qp_objective_is_v2_of_its_kernel() {
    let (_, sol) = solve_with_free_theta(1, 0).unwrap();
    let k = sol.to_kernel(1, 0).unwrap();
    assert_abs_diff_eq!(sol.objective_value, v2(&k), epsilon = 1e-9);
    assert!(sol.kkt_residual < 1e-10);

    for m in 1..=4 {
        let theta = PolyKernel::optimal(m).unwrap().theta();
        for degree in [2 * m, 2 * m + 2, 2 * m + 6] {
            let problem =
                ConstrainedKernelProblem::new(degree, 0, theta, KernelConstraints::integer(m));
            let sol = solve_kernel_qp(&problem).unwrap();
            let k = sol.to_kernel(m, 0).unwrap();
            assert!(
                sol.kkt_residual < 1e-10,
                "m={m} D={degree}: {}",
                sol.kkt_residual
            );
            assert_abs_diff_eq!(sol.objective_value, v2(&k), epsilon = 1e-9);
        }
    }
}

#[test]
fn qp_kernels_reach_higher_order() {
    // the oracle's order-2m kernels do satisfy every vanishing moment and are signed
    for m in 2..=4 {
        let theta = PolyKernel::optimal(m).unwrap().theta();
        let problem =
            ConstrainedKernelProblem::new(2 * m + 4, 0, theta, KernelConstraints::integer(m))
                .with_boundary_zero();
        let sol = solve_kernel_qp(&problem).unwrap();
        for l in (2..2 * m).step_by(2) {
            assert!(sol.even_moment(l).abs() < 1e-9, "m={m} l={l}");
        }
        let k = sol.to_kernel(m, 0).unwrap();
        let min = uniform_grid(0.0, theta, 2001)
            .unwrap()
            .into_iter()
            .map(|y| k.eval(y))
            .fold(f64::INFINITY, f64::min);
        assert!(min < 0.0, "m={m}");
    }
}

#[test]
fn closed_form_kernels_pass_v2_perturbation() {
    for k in all_kernels()
        .into_iter()
        .filter(|k| k.as_poly().is_none_or(|p| p.r() == 0))
    {
        let report = perturbation_test(&k, 60, 11).unwrap();
        assert!(report.worst_relative_change >= -1e-8, "{k:?}: {report:?}");
    }
}

/// Φ under centred perturbations, exactly as stated for the fractional
/// kernels. Along `|y|^β − mean` the change in Φ is third order in δ and
/// negative for one sign, so this can fail by a few 1e-6 depending on how
/// much of that direction the random draws contain.
#[test]
fn phi_perturbation_bound() {
    let mut worst = Vec::new();
    for beta in [1.5, 2.0, 2.5] {
        let k = FracKernel::optimal(beta).unwrap();
        let report = PerturbationTest::phi(beta, &k.constraints(), k.theta())
            .run(&k, 200, 7)
            .unwrap();
        worst.push((beta, report.worst_relative_change));
    }
    assert!(worst.iter().all(|&(_, w)| w >= -1e-6), "{worst:?}");
}

#[test]
fn mise_tables_are_bit_identical() {
    let run = || {
        MiseExperiment {
            target: TargetDensity::bimodal(),
            kernel: FracKernel::optimal(1.5).unwrap().into(),
            n_list: vec![200, 800],
            rule: BandwidthRule::MiseOptimal { beta: 1.5 },
            replications: 4,
            seed: 99,
        }
        .run()
        .unwrap()
        .to_tsv()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_mass_is_one(
        data in proptest::collection::vec(-4.0f64..4.0, 1..60),
        h in 0.1f64..2.0,
        m in 1usize..4,
    ) {
        let k: AnyKernel = PolyKernel::optimal(m).unwrap().into();
        let d = Dataset::new(data).unwrap();
        let (lo, hi) = d.range();
        let reach = k.support() * h;
        let grid = uniform_grid(lo - reach, hi + reach, 4001).unwrap();
        let spacing = grid[1] - grid[0];
        let e = parzen_rosenblatt(&d, &k, h, &grid).unwrap();
        // the kernel's second derivative scales the trapezoid error
        let curvature = k.as_poly().unwrap().eval_deriv(2, 0.0).abs().max(1.0) * 4.0;
        prop_assert!((e.trapezoid_mass() - 1.0).abs() <= 2.0 * spacing * spacing * curvature / (h * h * h));
    }

    #[test]
    fn perturbation_is_seed_stable(seed in 0u64..1000) {
        let k: AnyKernel = PolyKernel::optimal(1).unwrap().into();
        let report = perturbation_test(&k, 8, seed).unwrap();
        prop_assert!(report.worst_relative_change >= -1e-8);
    }
}
