//! `cantor-dpp`: command-line driver for the cantor-dpp library.
//!
//! Exit codes: 0 success, 1 a `verify` inequality failed, 2 usage or
//! validation error, 3 quadrature accuracy not reached.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_dpp::{QuadratureRule, USequence, Which};

#[derive(Parser, Debug)]
#[command(name = "cantor-dpp", version, about, arg_required_else_help = true)]
struct Cli {
    /// Directory that receives every output file and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a Cantor set and write its JSON spec.
    Construct(ConstructArgs),
    /// Evaluate the transform of I or C on a log-spaced frequency grid.
    Fourier(FourierArgs),
    /// Discretize the kernel on [-W, W] and report its spectrum.
    Gram(GramArgs),
    /// Check the sine-series majorant and the squared-decay ratios.
    DecayCheck(DecayArgs),
    /// Variance of the log-tapered linear statistic over several outer radii.
    VarianceScan(VarianceArgs),
    /// The four domain integrals against their closed-form bounds.
    Jbounds(JArgs),
    /// Sample the process and summarize counts and linear statistics.
    Sample(SampleArgs),
    /// Run decay-check, jbounds and variance-scan; exit 0 iff every inequality holds.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    /// Target measure of C (selects the target-measure construction).
    #[arg(long, conflicts_with_all = ["ratios", "lengths"])]
    theta: Option<f64>,
    /// Rigidity exponent in (0, 1).
    #[arg(long)]
    delta: Option<f64>,
    /// Built-in u-sequence for the target-measure construction.
    #[arg(long = "u", default_value = "geometric")]
    u_seq: USequence,
    /// Comma-separated ratios α_n; the last one repeats up to --max-level.
    #[arg(long, value_delimiter = ',', conflicts_with = "lengths")]
    ratios: Option<Vec<f64>>,
    /// Comma-separated lengths l_n.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
    #[arg(long)]
    max_level: Option<usize>,
    /// log2 of the smallest materialized length.
    #[arg(long)]
    log2_floor: Option<f64>,
    /// Also write the removed intervals of levels 1..=N as CSV.
    #[arg(long, value_name = "N")]
    dump_levels: Option<usize>,
    /// File name of the written spec inside --out.
    #[arg(long, default_value = "spec.json")]
    name: String,
}

#[derive(Args, Debug)]
pub struct FourierArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value = "I")]
    which: Which,
    #[arg(long, default_value_t = 1e-2)]
    xi_min: f64,
    #[arg(long, default_value_t = 1e3)]
    xi_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
pub struct GramArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value = "C")]
    which: Which,
    /// Half-width W of the window.
    #[arg(long)]
    window: f64,
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value = "trapezoid")]
    rule: QuadratureRule,
}

#[derive(Args, Debug)]
pub struct DecayArgs {
    #[arg(long)]
    set: PathBuf,
    /// Defaults to the spec's delta.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_XI_MAX)]
    xi_max: f64,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
pub struct VarianceArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value = "C")]
    which: Which,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Comma-separated outer radii.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    radii: Vec<f64>,
    /// Enables the decay bound; defaults to the spec's delta.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
pub struct JArgs {
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, value_delimiter = ',', default_value = "11,101,1001")]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value = "C")]
    which: Which,
    #[arg(long, default_value_t = 10.0)]
    window: f64,
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inner radius of the test function.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Outer radius of the test function.
    #[arg(long = "R", default_value_t = 5.0)]
    big_r: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value = "C")]
    which: Which,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, value_delimiter = ',', default_value = "11,101,1001")]
    j_radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    v_radii: Vec<f64>,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_XI_MAX)]
    xi_max: f64,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = cantor_dpp::rigidity::DEFAULT_TOL)]
    tol: f64,
}

/// A `verify` run in which some inequality failed.
#[derive(Debug)]
pub struct VerifyFailed(pub Vec<String>);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join("; "))
    }
}

impl std::error::Error for VerifyFailed {}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("CANTOR_DPP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| cantor_dpp::Error::Domain(format!("CANTOR_DPP_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<cantor_dpp::Error>() {
        Some(e) if e.is_accuracy() => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Construct(a) => commands::construct(out, &a),
        Command::Fourier(a) => commands::fourier(out, &a),
        Command::Gram(a) => commands::gram(out, &a),
        Command::DecayCheck(a) => commands::decay(out, &a),
        Command::VarianceScan(a) => commands::variance(out, &a),
        Command::Jbounds(a) => commands::jbounds(out, &a),
        Command::Sample(a) => commands::sample(out, &a),
        Command::Verify(a) => commands::verify(out, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
