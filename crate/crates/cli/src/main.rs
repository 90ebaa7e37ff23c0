//! `optkern`: build optimal kernels, verify them, estimate densities and run
//! MISE experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

mod config;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optkern::estimator::io::{estimate_to_json, estimate_to_tsv, read_dataset, Column};
use optkern::estimator::{
    derivative_estimate, log_transform_estimate, parzen_rosenblatt, uniform_grid, wolverton_wagner,
    BandwidthRule, DensityEstimate, MiseExperiment, TargetDensity,
};
use optkern::kernels::{kernel_table, max_abs_residual, moment_residuals, v2, KernelDescriptor};
use optkern::variational::{
    perturbation_test, solve_with_free_theta, OracleReport, PerturbationReport, PerturbationTest,
};
use optkern::{AnyKernel, Error, FracKernel, Kernel, PolyKernel};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_VERIFY: u8 = 3;

const COEFF_TOL: f64 = 1e-8;
const KKT_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;
const PERTURBATION_TOL: f64 = -1e-8;
const QP_MAX_M: usize = 4;
const DEFAULT_GRID_POINTS: usize = 1001;

#[derive(Parser, Debug)]
#[command(
    name = "optkern",
    version,
    about = "Optimal signed kernels for density estimation"
)]
#[command(
    after_help = "Any flag can also be given in a key=value file passed with --config FILE; flags win."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a kernel and print its descriptor (or a value table).
    Kernel(KernelArgs),
    /// Cross-check a kernel against the QP oracle and the perturbation test.
    Verify(VerifyArgs),
    /// Estimate a density (or derivative) from data.
    Estimate(EstimateArgs),
    /// Monte Carlo MISE experiment with a fitted log-log slope.
    Mise(MiseArgs),
}

#[derive(Args, Debug, Clone)]
#[group(id = "order", required = true, multiple = false)]
struct Order {
    /// Integer order: the kernel has order 2m.
    #[arg(long, group = "order")]
    m: Option<usize>,
    /// Fractional order beta > 0.
    #[arg(long, group = "order")]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[command(flatten)]
    order: Order,
    /// Derivative order for the derivative-estimation kernel (needs --m).
    #[arg(long, requires = "m")]
    r: Option<usize>,
    /// Use the support half-width of the printed formula instead of the corrected one.
    #[arg(long, requires = "m", conflicts_with = "r")]
    paper_literal_theta: bool,
    /// Emit a `y<TAB>K(y)` table instead of the JSON descriptor.
    #[arg(long)]
    table: bool,
    /// Number of table points.
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    order: Order,
    #[arg(long, requires = "m")]
    paper_literal_theta: bool,
    /// Random perturbation trials.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    order: Order,
    /// CSV (one observation per row) or JSON lines `{"x": value}` (.jsonl).
    #[arg(long)]
    input: PathBuf,
    /// CSV column: header name or zero-based index.
    #[arg(long, default_value = "0")]
    column: String,
    /// Fixed bandwidth.
    #[arg(long, conflicts_with = "h_rule", required_unless_present = "h_rule")]
    h: Option<f64>,
    /// Bandwidth rule: fixed:H, power:C,GAMMA or mise:BETA.
    #[arg(long, value_parser = parse_rule)]
    h_rule: Option<BandwidthRule>,
    /// Evaluation grid min:max:count (default: data range widened by the kernel reach).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Recursive Wolverton–Wagner estimator.
    #[arg(long, conflicts_with_all = ["log_transform", "deriv"])]
    recursive: bool,
    /// Estimate through ln(x) for positive data.
    #[arg(long, conflicts_with = "deriv")]
    log_transform: bool,
    /// Estimate the r-th derivative of the density.
    #[arg(long)]
    deriv: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MiseArgs {
    #[command(flatten)]
    order: Order,
    /// Target density: normal or mixture.
    #[arg(long, default_value = "normal")]
    target: String,
    #[arg(long)]
    seed: u64,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 4096, 16384])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    replications: usize,
    /// Bandwidth rule (default power:1,1/(4m+1) or power:1,1/(2beta+1)).
    #[arg(long, value_parser = parse_rule)]
    h_rule: Option<BandwidthRule>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct GridSpec {
    min: f64,
    max: f64,
    count: usize,
}

fn parse_rule(s: &str) -> Result<BandwidthRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("bad grid '{s}', expected min:max:count");
    if parts.len() != 3 {
        return Err(bad());
    }
    let min = parts[0].trim().parse().map_err(|_| bad())?;
    let max = parts[1].trim().parse().map_err(|_| bad())?;
    let count = parts[2].trim().parse().map_err(|_| bad())?;
    uniform_grid(min, max, count).map_err(|e| e.to_string())?;
    Ok(GridSpec { min, max, count })
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn build_kernel(order: &Order, r: usize, literal: bool) -> Result<AnyKernel, Failure> {
    Ok(match (order.m, order.beta) {
        (Some(m), None) if r > 0 => PolyKernel::derivative(m, r)?.into(),
        (Some(m), None) if literal => PolyKernel::printed_formula(m)?.into(),
        (Some(m), None) => PolyKernel::optimal(m)?.into(),
        (None, Some(_)) if r > 0 || literal => {
            return Err(Failure::Usage(
                "--r and --paper-literal-theta need --m".into(),
            ))
        }
        (None, Some(beta)) => FracKernel::optimal(beta)?.into(),
        _ => return Err(Failure::Usage("give exactly one of --m and --beta".into())),
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Data(e.to_string()))
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn cmd_kernel(args: KernelArgs) -> Result<(), Failure> {
    let kernel = build_kernel(&args.order, args.r.unwrap_or(0), args.paper_literal_theta)?;
    let text = if args.table {
        kernel_table(&kernel, args.points)
    } else {
        json(&kernel.descriptor())?
    };
    emit(args.out.as_ref(), &text)
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    value: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            pass: value.abs() < tolerance,
            value,
            tolerance,
            note: None,
        }
    }

    fn failed(name: &str, note: String) -> Self {
        Check {
            name: name.into(),
            pass: false,
            value: f64::NAN,
            tolerance: 0.0,
            note: Some(note),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    kernel: KernelDescriptor,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
    perturbation: Vec<PerturbationReport>,
    seed: u64,
    trials: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

fn max_coeff_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let kernel = build_kernel(&args.order, 0, args.paper_literal_theta)?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut oracle = None;
    let mut perturbation = Vec::new();

    let residuals = moment_residuals(&kernel, &kernel.constraints());
    checks.push(Check::at_most(
        "moment residuals",
        max_abs_residual(&residuals),
        RESIDUAL_TOL,
    ));
    let closed = match &kernel {
        AnyKernel::Poly(p) => p.v2_closed_form(),
        AnyKernel::Frac(f) => Some(f.v2_closed_form()),
    };
    if let Some(closed) = closed {
        checks.push(Check::at_most(
            "V2 closed form vs quadrature",
            v2(&kernel) - closed,
            RESIDUAL_TOL,
        ));
    }

    match &kernel {
        AnyKernel::Poly(p) if p.m() <= QP_MAX_M => match solve_with_free_theta(p.m(), 0) {
            Ok((theta, sol)) => {
                checks.push(Check::at_most(
                    "QP theta agreement",
                    theta - p.theta(),
                    COEFF_TOL,
                ));
                let gap = max_coeff_gap(&sol.coefficients, p.coefficients());
                checks.push(Check::at_most("QP coefficient agreement", gap, COEFF_TOL));
                checks.push(Check::at_most("QP KKT residual", sol.kkt_residual, KKT_TOL));
                oracle = Some(OracleReport::new(
                    format!("free-theta QP, m={}", p.m()),
                    &sol,
                    None,
                ));
            }
            Err(e) => checks.push(Check::failed("QP oracle", e.to_string())),
        },
        AnyKernel::Poly(p) => {
            notes.push(format!("m={} > {QP_MAX_M}: QP cross-check not run", p.m()))
        }
        AnyKernel::Frac(f) => {
            if f.beta() == 2.0 {
                let epa = PolyKernel::optimal(1)?;
                let gap = (f.theta() - epa.theta())
                    .abs()
                    .max((f.lambda() - epa.coefficients()[0]).abs())
                    .max((f.mu() * f.theta().powi(2) + epa.coefficients()[1]).abs());
                checks.push(
                    Check::at_most("agreement with m=1", gap, COEFF_TOL)
                        .with_note("beta=2 coincides with the m=1 kernel"),
                );
            }
            // informational: the fractional kernel is only stationary for Phi, a
            // third-order decrease along |y|^beta exists
            let phi = PerturbationTest::phi(f.beta(), &f.constraints(), f.theta()).run(
                f,
                args.trials,
                args.seed,
            )?;
            notes.push(format!(
                "Phi perturbation (not a pass criterion): worst change {:e}",
                phi.worst_relative_change
            ));
            perturbation.push(phi);
        }
    }

    let report = perturbation_test(&kernel, args.trials, args.seed)?;
    if report.feasibility_residual > RESIDUAL_TOL {
        notes.push(format!(
            "kernel violates its own constraints by {:e}",
            report.feasibility_residual
        ));
    }
    checks.push(Check::at_most(
        "V2 perturbation",
        report.worst_relative_change.min(0.0),
        -PERTURBATION_TOL,
    ));
    perturbation.insert(0, report);

    let pass = checks.iter().all(|c| c.pass);
    finish_verify(args, kernel, checks, oracle, perturbation, notes, pass)
}

fn finish_verify(
    args: VerifyArgs,
    kernel: AnyKernel,
    checks: Vec<Check>,
    oracle: Option<OracleReport>,
    perturbation: Vec<PerturbationReport>,
    notes: Vec<String>,
    pass: bool,
) -> Result<(), Failure> {
    let report = VerifyReport {
        pass,
        kernel: kernel.descriptor(),
        checks,
        oracle,
        perturbation,
        seed: args.seed,
        trials: args.trials,
        notes,
    };
    emit(args.out.as_ref(), &json(&report)?)?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::Verification(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    let deriv = args.deriv.unwrap_or(0);
    let kernel = build_kernel(&args.order, 0, false)?;
    if deriv > 0 && matches!(kernel, AnyKernel::Frac(_)) {
        return Err(Failure::Usage(
            "--deriv needs a polynomial kernel (--m)".into(),
        ));
    }
    let data = read_dataset(&args.input, &Column::parse(&args.column))?;
    let n = data.len();
    let rule = match (args.h, args.h_rule) {
        (Some(h), _) => BandwidthRule::Fixed { h },
        (None, Some(rule)) => rule,
        (None, None) => return Err(Failure::Usage("give --h or --h-rule".into())),
    };
    rule.validate()?;
    let law = rule.power_law(&kernel)?;
    // widest bandwidth in use: h_1 for the recursive estimator, h(n) otherwise
    let h = law.at(n);
    let reach = kernel.support() * if args.recursive { law.at(1).max(h) } else { h };

    let grid = match args.grid {
        Some(g) => uniform_grid(g.min, g.max, g.count)?,
        None if args.log_transform => {
            let (lo, hi) = data.range();
            if lo <= 0.0 {
                return Err(Error::NonPositiveObservation {
                    index: data.values().iter().position(|&v| v <= 0.0).unwrap_or(0),
                    value: lo,
                }
                .into());
            }
            uniform_grid(
                (lo.ln() - reach).exp(),
                (hi.ln() + reach).exp(),
                DEFAULT_GRID_POINTS,
            )?
        }
        None => {
            let (lo, hi) = data.range();
            uniform_grid(lo - reach, hi + reach, DEFAULT_GRID_POINTS)?
        }
    };

    let estimate: DensityEstimate = if args.recursive {
        wolverton_wagner(&data, &kernel, rule, &grid)?
    } else if args.log_transform {
        log_transform_estimate(&data, &kernel, h, &grid)?
    } else if deriv > 0 {
        derivative_estimate(&data, &kernel, deriv, h, &grid)?
    } else {
        parzen_rosenblatt(&data, &kernel, h, &grid)?
    };
    let text = match args.format {
        Format::Tsv => estimate_to_tsv(&estimate)?,
        Format::Json => {
            let mut s = estimate_to_json(&estimate)?;
            s.push('\n');
            s
        }
    };
    emit(args.out.as_ref(), &text)
}

fn cmd_mise(args: MiseArgs) -> Result<(), Failure> {
    let kernel = build_kernel(&args.order, 0, false)?;
    let target: TargetDensity = args
        .target
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let rule = match args.h_rule {
        Some(rule) => rule,
        None => {
            let gamma = match &kernel {
                AnyKernel::Poly(p) => 1.0 / (4 * p.m() + 1) as f64,
                AnyKernel::Frac(f) => 1.0 / (2.0 * f.beta() + 1.0),
            };
            BandwidthRule::Power { c: 1.0, gamma }
        }
    };
    let table = MiseExperiment {
        target,
        kernel,
        n_list: args.n,
        rule,
        replications: args.replications,
        seed: args.seed,
    }
    .run()?;
    emit(args.out.as_ref(), &table.to_tsv())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Mise(a) => cmd_mise(a),
    }
}

fn main() -> ExitCode {
    let mut args: Vec<String> = std::env::args().collect();
    if let Err(e) = config::apply(&mut args) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
