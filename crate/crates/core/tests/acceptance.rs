//! Acceptance criteria, one line of output each.
//!
//! Runs without the libtest harness so that every PASS/FAIL line is printed
//! regardless of capture settings. The process exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use optkern::estimator::{
    derivative_estimate, parzen_rosenblatt, uniform_grid, wolverton_wagner, BandwidthRule, Dataset,
    MiseExperiment, TargetDensity,
};
use optkern::kernels::{
    max_abs_residual, moment_residuals, printed_minimal_value, v2, MomentConstraint, PolyOrigin,
};
use optkern::variational::{
    derivative_kernel_qp, perturbation_test, solve_with_free_theta, PerturbationTest,
};
use optkern::{AnyKernel, FracKernel, Kernel, KernelConstraints, PolyKernel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

fn sqrt5() -> f64 {
    5f64.sqrt()
}

fn epanechnikov_recovery() -> Outcome {
    let start = Instant::now();
    let k = PolyKernel::optimal(1).unwrap();
    let elapsed = start.elapsed();
    let expected = [3.0 / (4.0 * sqrt5()), -3.0 / (20.0 * sqrt5())];
    let got = k.monomial_coefficients();
    let err = got
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pass = close(k.theta(), sqrt5(), 1e-12)
        && got.len() == 2
        && err < 1e-12
        && elapsed < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "theta={:.17} max coefficient error={err:.3e} time={elapsed:?}",
            k.theta()
        ),
    )
}

fn second_order_support() -> Outcome {
    let theta = PolyKernel::optimal(2).unwrap().theta();
    let expected = (63.0f64 / 11.0).powf(0.25);
    let literal = PolyKernel::printed_formula(2).unwrap();
    let residuals = moment_residuals(&literal, &literal.constraints());
    let top = residuals
        .iter()
        .find(|r| r.constraint == MomentConstraint::Normalization(4.0))
        .map(|r| r.residual)
        .unwrap();
    let pass = close(theta, expected, 1e-12)
        && top.abs() > 0.5
        && literal.origin() == PolyOrigin::PrintedFormula;
    outcome(
        pass,
        format!("theta0={theta:.17} (expected {expected:.17}); literal theta={:.6} gives int y^4 K - 1 = {top:.6}", literal.theta()),
    )
}

fn moment_constraints() -> Outcome {
    let start = Instant::now();
    let mut worst = Vec::new();
    for m in 1..=6 {
        let k = PolyKernel::optimal(m).unwrap();
        worst.push(max_abs_residual(&moment_residuals(&k, &k.constraints())));
    }
    let elapsed = start.elapsed();
    let pass = worst.iter().all(|&w| w < 1e-10) && elapsed < Duration::from_millis(100);
    let listed: Vec<String> = worst
        .iter()
        .enumerate()
        .map(|(i, w)| format!("m={}:{w:.2e}", i + 1))
        .collect();
    outcome(
        pass,
        format!("max residual per m [{}] time={elapsed:?}", listed.join(" ")),
    )
}

fn minimal_value() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in 1..=6 {
        let k = PolyKernel::optimal(m).unwrap();
        let closed = (4 * m + 2) as f64 / ((4 * m + 1) as f64 * 2.0 * k.theta());
        worst = worst.max((v2(&k) - closed).abs());
    }
    let epa = PolyKernel::optimal(1).unwrap();
    let remark = 3.0 / (5.0 * sqrt5());
    let printed = printed_minimal_value(1, epa.theta());
    let printed_rel = (printed - v2(&epa)).abs() / v2(&epa);
    let pass = worst < 1e-10 && close(v2(&epa), remark, 1e-10) && printed_rel > 0.05;
    outcome(
        pass,
        format!(
            "max |V2 - closed form|={worst:.2e}; printed formula off by {:.1}% at m=1",
            100.0 * printed_rel
        ),
    )
}

fn fractional_kernel() -> Outcome {
    let k2 = FracKernel::optimal(2.0).unwrap();
    let s5 = sqrt5();
    let remark = close(k2.theta(), s5, 1e-12)
        && close(k2.lambda(), 3.0 / (4.0 * s5), 1e-12)
        && close(k2.mu(), 3.0 / (20.0 * s5), 1e-12);
    let k15 = FracKernel::optimal(1.5).unwrap();
    let example = close(k15.theta(), 4f64.powf(2.0 / 3.0), 1e-12)
        && close(k15.lambda(), 5.0 / 6.0 * 4f64.powf(-2.0 / 3.0), 1e-12)
        && close(k15.mu(), 5.0 / 6.0 * 4f64.powf(-5.0 / 3.0), 1e-12);
    let mut worst: f64 = 0.0;
    for beta in [1.0, 1.5, 2.0, 2.5] {
        let k = FracKernel::optimal(beta).unwrap();
        worst = worst.max((v2(&k) - FracKernel::minimal_value(beta)).abs());
    }
    outcome(
        remark && example && worst < 1e-10,
        format!("beta=2 parameters ok={remark}; beta=3/2 parameters ok={example}; max |V2 - minimal value|={worst:.2e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for m in 1..=4 {
        let closed = PolyKernel::optimal(m).unwrap();
        match solve_with_free_theta(m, 0) {
            Ok((theta, sol)) => {
                let dtheta = (theta - closed.theta()).abs();
                let dc = sol
                    .coefficients
                    .iter()
                    .zip(closed.coefficients())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let ok = dtheta < 1e-8 && dc < 1e-8 && sol.kkt_residual < 1e-10;
                pass &= ok;
                notes.push(format!(
                    "m={m}: dtheta={dtheta:.2e} dcoef={dc:.2e} kkt={:.2e}",
                    sol.kkt_residual
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("m={m}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    outcome(pass, format!("{} time={elapsed:?}", notes.join("; ")))
}

struct Uniform(f64);

impl Kernel for Uniform {
    fn eval(&self, y: f64) -> f64 {
        if y.abs() <= self.0 {
            0.5 / self.0
        } else {
            0.0
        }
    }
    fn support(&self) -> f64 {
        self.0
    }
    fn is_polynomial(&self) -> bool {
        true
    }
}

fn perturbation_optimality() -> Outcome {
    let kernels: [(&str, AnyKernel); 4] = [
        ("m=1", PolyKernel::optimal(1).unwrap().into()),
        ("m=2", PolyKernel::optimal(2).unwrap().into()),
        ("beta=1.5", FracKernel::optimal(1.5).unwrap().into()),
        ("beta=2", FracKernel::optimal(2.0).unwrap().into()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, k) in &kernels {
        let report = perturbation_test(k, 200, 7).unwrap();
        pass &= report.worst_relative_change >= -1e-8;
        notes.push(format!("{name}:{:.2e}", report.worst_relative_change));
    }
    // uniform on [-√3, √3] meets the order-2 constraints; perturb on [-√5, √5]
    let uniform = PerturbationTest::v2(&KernelConstraints::integer(1), sqrt5())
        .run(&Uniform(3f64.sqrt()), 200, 7)
        .unwrap();
    pass &= uniform.worst_relative_change < -1e-4;
    notes.push(format!("uniform:{:.2e}", uniform.worst_relative_change));
    outcome(pass, format!("worst relative change {}", notes.join(" ")))
}

fn normal_sample(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

fn estimator_identities() -> Outcome {
    let data = normal_sample(1000, 42);
    let k: AnyKernel = PolyKernel::optimal(1).unwrap().into();
    let h = 0.5;
    let grid = uniform_grid(-5.0, 5.0, 1001).unwrap();
    let pr = parzen_rosenblatt(&data, &k, h, &grid).unwrap();
    let ww = wolverton_wagner(&data, &k, BandwidthRule::Fixed { h }, &grid).unwrap();
    let ww_gap = pr
        .values
        .iter()
        .zip(&ww.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // central differences of the PR curve at spacing 1e-4; points whose stencil
    // straddles a support edge ξ ± θh (a kink of the curve) are not interior
    let fine = uniform_grid(-3.0, 3.0, 60_001).unwrap();
    let curve = parzen_rosenblatt(&data, &k, h, &fine).unwrap().values;
    let deriv = derivative_estimate(&data, &k, 1, h, &fine).unwrap().values;
    let reach = k.support() * h;
    let mut edges: Vec<f64> = data
        .values()
        .iter()
        .flat_map(|x| [x - reach, x + reach])
        .collect();
    edges.sort_by(f64::total_cmp);
    let mut fd_gap: f64 = 0.0;
    let mut checked = 0;
    for i in 1..fine.len() - 1 {
        let (lo, hi) = (fine[i - 1], fine[i + 1]);
        let at = edges.partition_point(|&e| e < lo);
        if at < edges.len() && edges[at] <= hi {
            continue;
        }
        let fd = (curve[i + 1] - curve[i - 1]) / (fine[i + 1] - fine[i - 1]);
        fd_gap = fd_gap.max((fd - deriv[i]).abs());
        checked += 1;
    }
    outcome(
        ww_gap < 1e-12 && fd_gap < 1e-5,
        format!(
            "max |WW - PR|={ww_gap:.2e}; max |f' - FD|={fd_gap:.2e} over {checked} interior points"
        ),
    )
}

fn rate_check() -> Outcome {
    let start = Instant::now();
    let n_list: Vec<usize> = (10..=16).map(|p| 1 << p).collect();
    let run = |m: usize, gamma: f64| {
        MiseExperiment {
            target: TargetDensity::standard_normal(),
            kernel: PolyKernel::optimal(m).unwrap().into(),
            n_list: n_list.clone(),
            rule: BandwidthRule::Power { c: 1.0, gamma },
            replications: 20,
            seed: 7,
        }
        .run()
        .unwrap()
    };
    let s1 = run(1, 0.2).slope;
    let s2 = run(2, 1.0 / 9.0).slope;
    let elapsed = start.elapsed();
    let pass = (-0.95..=-0.65).contains(&s1)
        && (-1.05..=-0.75).contains(&s2)
        && elapsed < Duration::from_secs(120);
    outcome(pass, format!("slope m=1: {s1:.4} (target -0.8); slope m=2: {s2:.4} (target -0.889); time={elapsed:?}"))
}

fn derivative_report() -> Outcome {
    let k = PolyKernel::derivative(2, 1).unwrap();
    let residuals = moment_residuals(&k, &k.constraints());
    let second = residuals
        .iter()
        .find(|r| r.constraint == MomentConstraint::Vanishing(2))
        .unwrap()
        .value;
    let mass = residuals
        .iter()
        .find(|r| r.constraint == MomentConstraint::Mass)
        .unwrap()
        .value;
    let expected = k.theta().powi(2) / 3.0;
    let descriptor = AnyKernel::from(k.clone()).descriptor();
    let alt = derivative_kernel_qp(2, 1).unwrap();
    let pass = close(second, expected, 1e-10)
        && second.abs() > 1e-3
        && descriptor.discrepancy.is_some()
        && close(mass, 1.0, 1e-10)
        && close(alt.even_moment(0), 1.0, 1e-10);
    outcome(
        pass,
        format!(
            "int y^2 K={second:.12} (theta^2/3={expected:.12}); mass={mass:.12}; QP alternative mass={:.12} int y^2={:.2e} kkt={:.2e}",
            alt.even_moment(0),
            alt.even_moment(2),
            alt.kkt_residual
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Epanechnikov recovery", epanechnikov_recovery),
        ("m=2 support", second_order_support),
        ("moment constraints m=1..6", moment_constraints),
        ("minimal value", minimal_value),
        ("fractional-order kernel", fractional_kernel),
        ("oracle equivalence m=1..4", oracle_equivalence),
        ("perturbation optimality", perturbation_optimality),
        ("estimator identities", estimator_identities),
        ("MISE rate check", rate_check),
        ("derivative-kernel report", derivative_report),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| outcome(false, "panicked"));
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
