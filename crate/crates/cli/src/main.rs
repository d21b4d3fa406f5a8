//! Batch front end: parse a run configuration, construct the medium,
//! dispatch solves / rate atlases / bound estimates / oracle comparisons /
//! functional-calculus runs, and emit JSON reports and CSV logs.
//!
//! Exit codes: 0 success (and convergence), 1 invalid input, 2 the
//! mathematics did not converge. Nothing is written on validation failure.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use resolvent_core::error::Error as CoreError;
use resolvent_core::field::Field;
use resolvent_core::projection::apply_gamma1;
use resolvent_core::rates::{contour_atlas, AtlasWindow};
use resolvent_core::schemes::{function_of_operator, solve, ContourOptions, IterationReport};
use resolvent_core::spectral::dense_assemble;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "resolvent",
    about = "Matrix-free resolvent solvers for periodic two-phase media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one resolvent solve and write its report and residual log.
    Solve(SolveArgs),
    /// Sample the convergence-rate map chain over a complex-contrast window.
    Rates(RatesArgs),
    /// Estimate spectrum bounds by the power method (or the dense oracle).
    Bounds(ConfigOutArgs),
    /// Compare the configured scheme against the dense direct solve.
    Oracle(ConfigOutArgs),
    /// Apply an analytic function of the operator via contour quadrature.
    Funcalc(FuncalcArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual-history CSV path.
    #[arg(long)]
    residuals: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    alpha: f64,
    /// May be "inf" for the unconstrained interval.
    #[arg(long)]
    beta: String,
    /// Window as RE0,RE1,IM0,IM1.
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    /// Samples per axis.
    #[arg(long)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigOutArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FuncalcArgs {
    #[arg(long)]
    config: PathBuf,
    /// Function spec, e.g. "poly:0,0,1" for f(z) = z^2.
    #[arg(long)]
    function: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Rates(args) => cmd_rates(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Funcalc(args) => cmd_funcalc(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &PathBuf, seed_override: Option<u64>) -> Result<RunConfig, String> {
    let mut config = RunConfig::load(path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    Ok(config)
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<(), String> {
    if let Some(path) = path {
        fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    } else {
        print!("{contents}");
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| format!("serialization failed: {e}"))
}

/// Exit code 2 is reserved for mathematical non-convergence; everything
/// else that fails is invalid input or an environment problem (1).
fn core_exit(err: &CoreError) -> Result<ExitCode, String> {
    match err {
        CoreError::Divergence { .. } | CoreError::NonConvergent { .. } => {
            eprintln!("non-convergent: {err}");
            Ok(ExitCode::from(2))
        }
        other => Err(other.to_string()),
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    command: &'static str,
    scheme: &'a str,
    config: &'a RunConfig,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    measured_rate: f64,
    rate_fitted: bool,
    theoretical_rate: f64,
    warnings: &'a [String],
    source_norm: f64,
    solution_norm: f64,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config, args.seed)?;
    let solve_config = config.build_solve_config().map_err(|e| e.to_string())?;
    let source = config
        .build_source(&solve_config.medium)
        .map_err(|e| e.to_string())?;

    let (solution, report): (Field, IterationReport) = match solve(&solve_config, &source) {
        Ok(pair) => pair,
        Err(e) => return core_exit(&e),
    };

    let json = to_json(&SolveReport {
        command: "solve",
        scheme: solve_config.scheme.as_str(),
        config: &config,
        iterations: report.iterations,
        converged: report.converged,
        final_residual: report.final_residual(),
        measured_rate: report.measured_rate,
        rate_fitted: report.rate_fitted,
        theoretical_rate: report.theoretical_rate,
        warnings: &report.warnings,
        source_norm: source.norm(),
        solution_norm: solution.norm(),
    })?;
    write_output(&args.out, &json)?;
    if let Some(path) = &args.residuals {
        fs::write(path, report.residual_csv())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_rates(args: RatesArgs) -> Result<ExitCode, String> {
    let beta = if args.beta == "inf" {
        f64::INFINITY
    } else {
        args.beta
            .parse()
            .map_err(|e| format!("invalid --beta: {e}"))?
    };
    let parts: Vec<&str> = args.window.split(',').collect();
    if parts.len() != 4 {
        return Err("invalid --window: expected RE0,RE1,IM0,IM1".into());
    }
    let mut values = [0.0f64; 4];
    for (v, p) in values.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|e| format!("invalid --window component {p:?}: {e}"))?;
    }
    let window =
        AtlasWindow::new(values[0], values[1], values[2], values[3]).map_err(|e| e.to_string())?;
    let atlas = contour_atlas(args.alpha, beta, &window, args.resolution, None)
        .map_err(|e| e.to_string())?;
    write_output(&args.out, &atlas.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BoundsReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    a_minus: f64,
    a_plus: f64,
    provenance: resolvent_core::spectral::BoundsProvenance,
    iterations_used: usize,
}

fn cmd_bounds(args: ConfigOutArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config, args.seed)?;
    let medium = config.build_medium().map_err(|e| e.to_string())?;
    let bounds = match config.build_bounds(&medium).map_err(|e| e.to_string())? {
        Some(b) => b,
        None => {
            // no bounds mode requested: default to the power method
            resolvent_core::spectral::power_method_extremes(&medium, 500, config.seed)
                .map_err(|e| e.to_string())?
        }
    };
    let json = to_json(&BoundsReport {
        command: "bounds",
        config: &config,
        a_minus: bounds.a_minus,
        a_plus: bounds.a_plus,
        provenance: bounds.provenance,
        iterations_used: bounds.iterations_used,
    })?;
    write_output(&args.out, &json)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    command: &'static str,
    scheme: &'a str,
    config: &'a RunConfig,
    dense_dimension: usize,
    iterations: usize,
    converged: bool,
    max_rel_deviation: f64,
}

fn cmd_oracle(args: ConfigOutArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config, args.seed)?;
    let solve_config = config.build_solve_config().map_err(|e| e.to_string())?;
    let source = config
        .build_source(&solve_config.medium)
        .map_err(|e| e.to_string())?;

    let op = match dense_assemble(&solve_config.medium) {
        Ok(op) => op,
        Err(e @ CoreError::DenseGuard { .. }) => {
            return Err(format!("{e}; pick a smaller geometry for oracle runs"))
        }
        Err(e) => return Err(e.to_string()),
    };
    let dense = op
        .solve_model(&solve_config.medium, &source)
        .map_err(|e| e.to_string())?;
    let (solution, report) = match solve(&solve_config, &source) {
        Ok(pair) => pair,
        Err(e) => return core_exit(&e),
    };
    let deviation = solution.sub(&dense).norm() / dense.norm().max(f64::MIN_POSITIVE);

    let json = to_json(&OracleReport {
        command: "oracle",
        scheme: solve_config.scheme.as_str(),
        config: &config,
        dense_dimension: op.dim(),
        iterations: report.iterations,
        converged: report.converged,
        max_rel_deviation: deviation,
    })?;
    write_output(&args.out, &json)?;
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[derive(Serialize)]
struct FuncalcReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    function: &'a str,
    nodes: usize,
    result_norm: f64,
    /// Relative deviation against direct repeated operator application
    /// (available because the function spec is a polynomial).
    direct_check_deviation: f64,
}

fn parse_polynomial(spec: &str) -> Result<Vec<f64>, String> {
    let body = spec
        .strip_prefix("poly:")
        .ok_or_else(|| format!("unsupported function spec {spec:?}; expected poly:c0,c1,..."))?;
    body.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| format!("invalid coefficient {c:?}: {e}"))
        })
        .collect()
}

fn cmd_funcalc(args: FuncalcArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.config, args.seed)?;
    let medium = config.build_medium().map_err(|e| e.to_string())?;
    let source = config.build_source(&medium).map_err(|e| e.to_string())?;
    let coefficients = parse_polynomial(&args.function)?;

    let f = move |z: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in coefficients.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    let options = ContourOptions {
        tolerance: config.tolerance.min(1e-11),
        ..ContourOptions::default()
    };
    let result = match function_of_operator(&medium, &f, &source, &options) {
        Ok(field) => field,
        Err(e) => return core_exit(&e),
    };

    // Horner evaluation with repeated operator application as the check
    let coefficients = parse_polynomial(&args.function)?;
    let projected = apply_gamma1(&source).map_err(|e| e.to_string())?;
    let mut direct = Field::zeros(projected.geometry().clone(), projected.components());
    for &c in coefficients.iter().rev() {
        direct = medium.apply_a(&direct).map_err(|e| e.to_string())?;
        direct.axpy(Complex64::new(c, 0.0), &projected);
    }
    let deviation = result.sub(&direct).norm() / direct.norm().max(f64::MIN_POSITIVE);

    let json = to_json(&FuncalcReport {
        command: "funcalc",
        config: &config,
        function: &args.function,
        nodes: options.nodes,
        result_norm: result.norm(),
        direct_check_deviation: deviation,
    })?;
    write_output(&args.out, &json)?;
    Ok(ExitCode::SUCCESS)
}
