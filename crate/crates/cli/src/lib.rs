//! Command-line front end for `qaoa-lab`.
//!
//! Every output file embeds the full run configuration and a
//! `generated_at_unix` timestamp; apart from the timestamp, rerunning the
//! same command reproduces the file byte for byte.

pub mod error;
pub mod plot;
pub mod records;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qaoa_lab::concentration::{
    concentration_series, fit_layer_curves, fit_scaling, sweep, transfer_experiment, SweepRecord,
};
use qaoa_lab::optimizer::multistart_maximize;
use qaoa_lab::{OptimizationResult, OptimizerConfig, ProblemSize, Seeding};
use serde::Serialize;

pub use error::{CliError, EXIT_NUMERICAL, EXIT_USAGE};
use records::{parse_records, reals, records_csv, records_json, rows_from_records, Real};

pub const THREADS_ENV: &str = "QAOA_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qaoa-lab",
    version,
    about = "Exact QAOA state-preparation overlaps and parameter concentration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize the overlap at one (n, p).
    Solve(SolveArgs),
    /// Optimize every n in a range, warm-starting each from the previous.
    Sweep(SweepArgs),
    /// Concentration distances and their log-log scaling fit.
    Analyze(AnalyzeArgs),
    /// Fit beta = pi/(a1 n + a2), gamma = b1 pi - b2 beta for one layer.
    Fit(FitArgs),
    /// Compare a warm start from w qubits with a cold multistart at n.
    Transfer(TransferArgs),
    /// Check the closed form against the statevector simulator and the
    /// gradient against finite differences.
    Verify(VerifyArgs),
    /// Render a record file as an SVG figure.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedingArg {
    Asymptotic,
    Uniform,
    Hybrid,
}

impl From<SeedingArg> for Seeding {
    fn from(s: SeedingArg) -> Self {
        match s {
            SeedingArg::Asymptotic => Seeding::AsymptoticSeeded,
            SeedingArg::Uniform => Seeding::UniformRandom,
            SeedingArg::Hybrid => Seeding::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizerArgs {
    /// Number of multistart restarts.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    /// RNG seed for restart points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient-norm tolerance on the scaled overlap.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Iteration cap per local search.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    #[arg(long, value_enum, default_value_t = SeedingArg::Hybrid)]
    pub seeding: SeedingArg,
}

impl OptimizerArgs {
    fn config(&self) -> Result<OptimizerConfig, CliError> {
        let config = OptimizerConfig {
            restarts: self.restarts as usize,
            max_iter: self.max_iter as usize,
            grad_tol: self.tol,
            rng_seed: self.seed,
            seeding: self.seeding.into(),
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n_min: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n_max: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Record file from `sweep`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Smallest n entering the scaling fit.
    #[arg(long)]
    pub n_min: Option<u64>,
    /// Largest n entering the scaling fit.
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// 1-based layer index.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub layer: u64,
    #[arg(long)]
    pub n_min: u64,
    #[arg(long)]
    pub n_max: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransferArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub w: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=verify::MAX_VERIFY_QUBITS as i64))]
    pub n_max: u32,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub p_max: u64,
    /// Random parameter draws per (n, p).
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Angles,
    Branches,
    Scaling,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub out: PathBuf,
}

/// Command name and flags, written into every output file.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a, T: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    #[serde(flatten)]
    pub args: &'a T,
}

impl<'a, T: Serialize> RunConfig<'a, T> {
    fn new(command: &'static str, args: &'a T) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            args,
        }
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn resolve_format(output: &OutputArgs, default: Format) -> Format {
    if let Some(f) = output.format {
        return f;
    }
    match output
        .out
        .as_deref()
        .and_then(|p| p.extension())
        .and_then(|e| e.to_str())
    {
        Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        _ => default,
    }
}

fn emit_records<C: Serialize>(
    records: &[SweepRecord],
    seed: u64,
    config: &C,
    output: &OutputArgs,
    default: Format,
) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::Input("no records to write".into()));
    }
    let rows = rows_from_records(records, seed);
    let text = match resolve_format(output, default) {
        Format::Csv => records_csv(&rows, config, timestamp())?,
        Format::Json => records_json(&rows, config, timestamp())?,
    };
    write_output(output.out.as_deref(), &text)
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, B: Serialize> {
    config: &'a C,
    generated_at_unix: u64,
    #[serde(flatten)]
    body: B,
}

fn emit_report<C: Serialize, B: Serialize>(
    config: &C,
    body: B,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let report = Report {
        config,
        generated_at_unix: timestamp(),
        body,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(out, &text)
}

fn to_usize(p: u64) -> Result<usize, CliError> {
    usize::try_from(p).map_err(|_| CliError::Usage(format!("depth {p} is too large")))
}

fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let config = args.optimizer.config()?;
    let size = ProblemSize::new(args.n, to_usize(args.p)?)?;
    let result = multistart_maximize(size, &config)?;
    let record = SweepRecord {
        n: args.n,
        p: size.p(),
        result,
        wall_time: 0.0,
    };
    emit_records(
        &[record],
        args.optimizer.seed,
        &RunConfig::new("solve", args),
        &args.output,
        Format::Json,
    )
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.n_max < args.n_min {
        return Err(CliError::Usage(format!(
            "--n-max ({}) is below --n-min ({})",
            args.n_max, args.n_min
        )));
    }
    let config = args.optimizer.config()?;
    let records = sweep(args.n_min, args.n_max, to_usize(args.p)?, &config)?;
    emit_records(
        &records,
        args.optimizer.seed,
        &RunConfig::new("sweep", args),
        &args.output,
        Format::Csv,
    )
}

#[derive(Serialize)]
struct PointOut {
    n: u64,
    delta_sq: Real,
}

#[derive(Serialize)]
struct ScalingOut {
    exponent: Real,
    prefactor: Real,
    r_squared: Real,
    n_min: u64,
    n_max: u64,
    points: usize,
}

#[derive(Serialize)]
struct AnalyzeOut {
    p: usize,
    distances: Vec<PointOut>,
    fit: ScalingOut,
}

fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let records = parse_records(&read_text(&args.input)?)?;
    let points = concentration_series(&records)?;
    let lo = args.n_min.unwrap_or(0);
    let hi = args.n_max.unwrap_or(u64::MAX);
    let selected: Vec<_> = points
        .iter()
        .copied()
        .filter(|pt| pt.n >= lo && pt.n <= hi)
        .collect();
    let fit = fit_scaling(&selected)?;
    let body = AnalyzeOut {
        p: records[0].p,
        distances: points
            .iter()
            .map(|pt| PointOut {
                n: pt.n,
                delta_sq: Real(pt.delta_sq),
            })
            .collect(),
        fit: ScalingOut {
            exponent: Real(fit.exponent),
            prefactor: Real(fit.prefactor),
            r_squared: Real(fit.r_squared),
            n_min: fit.n_range.0,
            n_max: fit.n_range.1,
            points: fit.points,
        },
    };
    emit_report(&RunConfig::new("analyze", args), body, args.out.as_deref())
}

#[derive(Serialize)]
struct FitOut {
    layer: usize,
    p: usize,
    a1: Real,
    a2: Real,
    b1: Real,
    b2: Real,
    beta_residual_norm: Real,
    gamma_residual_norm: Real,
    n_min: u64,
    n_max: u64,
    points: usize,
}

fn fit(args: &FitArgs) -> Result<(), CliError> {
    let records = parse_records(&read_text(&args.input)?)?;
    let layer = to_usize(args.layer)?;
    let p = records[0].p;
    if layer > p {
        return Err(CliError::Usage(format!(
            "--layer {layer} exceeds the record depth {p}"
        )));
    }
    let c = fit_layer_curves(&records, layer, (args.n_min, args.n_max))?;
    let body = FitOut {
        layer: c.layer,
        p,
        a1: Real(c.a1),
        a2: Real(c.a2),
        b1: Real(c.b1),
        b2: Real(c.b2),
        beta_residual_norm: Real(c.beta_residual_norm),
        gamma_residual_norm: Real(c.gamma_residual_norm),
        n_min: c.n_range.0,
        n_max: c.n_range.1,
        points: c.points,
    };
    emit_report(
        &RunConfig::new("fit", args),
        FitWrapper { fit: body },
        args.out.as_deref(),
    )
}

#[derive(Serialize)]
struct FitWrapper {
    fit: FitOut,
}

#[derive(Serialize)]
struct ResultOut {
    gammas: Vec<Real>,
    betas: Vec<Real>,
    overlap_scaled: Real,
    grad_norm: Real,
    iterations: usize,
    total_iterations: usize,
    branch: &'static str,
}

impl From<&OptimizationResult> for ResultOut {
    fn from(r: &OptimizationResult) -> Self {
        Self {
            gammas: reals(r.params.gammas()),
            betas: reals(r.params.betas()),
            overlap_scaled: Real(r.overlap.scaled),
            grad_norm: Real(r.grad_norm),
            iterations: r.iterations,
            total_iterations: r.total_iterations,
            branch: r.branch.as_str(),
        }
    }
}

#[derive(Serialize)]
struct TransferOut {
    w: u64,
    n: u64,
    p: usize,
    cold_iters: usize,
    warm_iters: usize,
    iteration_ratio: Real,
    overlap_gap: Real,
    source: ResultOut,
    cold: ResultOut,
    warm: ResultOut,
}

#[derive(Serialize)]
struct TransferWrapper {
    transfer: TransferOut,
}

fn transfer(args: &TransferArgs) -> Result<(), CliError> {
    if args.w >= args.n {
        return Err(CliError::Usage(format!(
            "--w ({}) must be below --n ({})",
            args.w, args.n
        )));
    }
    let config = args.optimizer.config()?;
    let r = transfer_experiment(args.w, args.n, to_usize(args.p)?, &config)?;
    let body = TransferOut {
        w: r.w,
        n: r.n,
        p: r.p,
        cold_iters: r.cold_iters,
        warm_iters: r.warm_iters,
        iteration_ratio: Real(r.warm_iters as f64 / r.cold_iters.max(1) as f64),
        overlap_gap: Real(r.overlap_gap),
        source: (&r.source).into(),
        cold: (&r.cold).into(),
        warm: (&r.warm).into(),
    };
    emit_report(
        &RunConfig::new("transfer", args),
        TransferWrapper { transfer: body },
        args.out.as_deref(),
    )
}

fn run_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let report = verify::run(
        args.n_max,
        to_usize(args.p_max)?,
        args.samples as usize,
        args.seed,
    )?;
    let passed = report.passed;
    emit_report(
        &RunConfig::new("verify", args),
        &report,
        args.out.as_deref(),
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(qaoa_lab::Error::Degenerate(format!(
            "verification failed: max overlap deviation {:e}, max gradient error {:e}",
            report.oracle.max_abs_deviation.0, report.gradient.max_relative_error.0
        ))))
    }
}

fn run_plot(args: &PlotArgs) -> Result<(), CliError> {
    let records = parse_records(&read_text(&args.input)?)?;
    let panels = match args.kind {
        PlotKind::Angles => plot::angles_panels(&records),
        PlotKind::Branches => plot::branches_panels(&records),
        PlotKind::Scaling => plot::scaling_panels(&records)?,
    };
    let desc = serde_json::to_string(&RunConfig::new("plot", args))?;
    write_output(Some(&args.out), &plot::render(&panels, &desc))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::Fit(a) => fit(a),
        Command::Transfer(a) => transfer(a),
        Command::Verify(a) => run_verify(a),
        Command::Plot(a) => run_plot(a),
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
