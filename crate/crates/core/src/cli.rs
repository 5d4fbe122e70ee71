//! `sfpca` command-line front-end: `simulate`, `fit`, `deflate`, `bench`.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 fit finished without
//! converging (best iterate still written), 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::deflation::{DeflationKind, DeflationScheme, DeflationState};
use crate::error::{Result, SfpcaError};
use crate::io::{read_matrix_file, write_matrix_file};
use crate::linalg::{s_norm, DenseMatrix, Vector};
use crate::mansfpca::{fit_manifold, Engine, EngineStats, ManConfig};
use crate::pipeline::{fit_pipeline, ComponentSummary, PipelineConfig};
use crate::rank1::Rank1Config;
use crate::simbench::tune::{SmootherCache, TuneGrid};
use crate::simbench::{generate_scenario, run_benchmark, BenchConfig, Method, ScenarioSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sfpca", version, about = "Sparse and functional PCA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded simulation scenario.
    Simulate(SimulateArgs),
    /// Fit sparse/functional PCs to a CSV matrix.
    Fit(FitArgs),
    /// Deflate a CSV matrix by given PCs and report orthogonality.
    Deflate(DeflateArgs),
    /// Run the simulation benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target ‖X*‖_F/‖E‖_F (default 1.2 for scenario 1, 1.7 for scenario 2).
    #[arg(long)]
    pub snr: Option<f64>,
    /// Window widening for scenario 2 (default p/12).
    #[arg(long)]
    pub overlap_shift: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Rank1,
    Madmm,
    Manpg,
    Amanpg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeflationArg {
    None,
    Hotelling,
    Projection,
    Schur,
}

impl DeflationArg {
    fn kind(self) -> Option<DeflationKind> {
        match self {
            DeflationArg::None => None,
            DeflationArg::Hotelling => Some(DeflationKind::Hotelling),
            DeflationArg::Projection => Some(DeflationKind::Projection),
            DeflationArg::Schur => Some(DeflationKind::Schur),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    #[arg(long, default_value_t = 0.0)]
    pub lambda_u: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_v: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_u: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_v: f64,
    /// Order of the difference penalty behind the smoothers.
    #[arg(long, default_value_t = 2, value_parser = parse_order)]
    pub penalty_order: usize,
}

fn parse_order(s: &str) -> std::result::Result<usize, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("penalty order must be 2 or 4, got {s}")),
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FitMethod::Madmm)]
    pub method: FitMethod,
    /// Deflation for the rank-one pipeline. Only valid with `--method rank1`.
    #[arg(long, value_enum)]
    pub deflation: Option<DeflationArg>,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// BIC-tune every rank-one component (overrides λ and α).
    #[arg(long)]
    pub tune: bool,
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Retained for interface symmetry; fits are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DeflateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// n×k left PCs
    #[arg(long)]
    pub u: PathBuf,
    /// p×k right PCs
    #[arg(long)]
    pub v: PathBuf,
    #[arg(long, value_enum, default_value_t = DeflationArg::Schur)]
    pub scheme: DeflationArg,
    /// Deflate column by column instead of as one block.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Comma-separated list of svd, hd, pd, sd, madmm, manpg, amanpg.
    #[arg(long, default_value = "svd,hd,pd,sd,madmm", value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target SNR (default 1.2 for scenario 1, 1.7 for scenario 2).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_u: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_v: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_u: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_v: f64,
    #[arg(long, default_value_t = 2, value_parser = parse_order)]
    pub penalty_order: usize,
    #[arg(long)]
    pub tune: bool,
    /// Record wall-clock time (outputs are then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Outcome of a successfully executed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

pub fn exit_code(err: &SfpcaError) -> i32 {
    match err {
        SfpcaError::Dimension(_)
        | SfpcaError::Config(_)
        | SfpcaError::Parse(_)
        | SfpcaError::Io(_)
        | SfpcaError::Csv(_)
        | SfpcaError::Json(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: fit did not converge; best iterate written");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Deflate(a) => cmd_deflate(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn column(v: &Vector) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateMeta {
    schema_version: u32,
    scenario: u8,
    n: usize,
    p: usize,
    k: usize,
    seed: u64,
    prng: &'static str,
    target_snr: f64,
    snr_realized: f64,
    gram_deviation_u: f64,
    gram_deviation_v: f64,
    overlap_shift: usize,
    d_star: Vec<f64>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let mut spec = ScenarioSpec::new(a.scenario, a.snr.unwrap_or(ScenarioSpec::default_snr(a.scenario)), a.seed)?;
    if let Some(s) = a.overlap_shift {
        spec.overlap_shift = s;
    }
    let gt = generate_scenario(&spec)?;
    ensure_dir(&a.out)?;
    write_matrix_file(a.out.join("x.csv"), &gt.x_noisy)?;
    write_matrix_file(a.out.join("u_star.csv"), &gt.u_star)?;
    write_matrix_file(a.out.join("v_star.csv"), &gt.v_star)?;
    write_matrix_file(a.out.join("d_star.csv"), &column(&gt.d_star))?;
    let meta = SimulateMeta {
        schema_version: SCHEMA_VERSION,
        scenario: spec.id,
        n: spec.n,
        p: spec.p,
        k: spec.k,
        seed: spec.seed,
        prng: "chacha8 (rand_chacha seed_from_u64) + box-muller",
        target_snr: spec.target_snr,
        snr_realized: gt.snr_realized,
        gram_deviation_u: gt.gram_deviation_u,
        gram_deviation_v: gt.gram_deviation_v,
        overlap_shift: gt.overlap_shift,
        d_star: gt.d_star.iter().copied().collect(),
    };
    write_json(&a.out.join("meta.json"), &meta)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct FitParams {
    lambda_u: f64,
    lambda_v: f64,
    alpha_u: f64,
    alpha_v: f64,
    penalty_order: usize,
    tune: bool,
    max_outer: usize,
}

#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    method: &'static str,
    deflation: Option<DeflationKind>,
    rank: usize,
    params: FitParams,
    converged: bool,
    d: Vec<f64>,
    objective_trace: Vec<f64>,
    final_objective: f64,
    feasibility_u: f64,
    feasibility_v: f64,
    engine_stats: Option<EngineStats>,
    degenerate: bool,
    components: Vec<ComponentSummary>,
}

fn validate_fit_args(a: &FitArgs) -> Result<Option<DeflationKind>> {
    let deflation = a.deflation.and_then(DeflationArg::kind);
    if a.method != FitMethod::Rank1 && deflation.is_some() {
        return Err(SfpcaError::Config(
            "--deflation requires --method rank1; manifold engines fit all components jointly".into(),
        ));
    }
    if a.method == FitMethod::Rank1 && a.rank > 1 && deflation.is_none() {
        return Err(SfpcaError::Config(
            "--method rank1 with --rank > 1 needs --deflation hotelling|projection|schur".into(),
        ));
    }
    if a.tune && a.method != FitMethod::Rank1 {
        return Err(SfpcaError::Config("--tune is only available with --method rank1".into()));
    }
    if a.rank < 1 {
        return Err(SfpcaError::Config("--rank must be ≥ 1".into()));
    }
    Ok(deflation)
}

pub fn cmd_fit(a: &FitArgs) -> Result<Outcome> {
    let deflation = validate_fit_args(a)?;
    let x = read_matrix_file(&a.input)?;
    let (n, p) = x.shape();
    let pen = &a.penalty;
    let mut cache = SmootherCache::new(pen.penalty_order);
    let s_u = cache.get(n, pen.alpha_u)?;
    let s_v = cache.get(p, pen.alpha_v)?;
    let params = FitParams {
        lambda_u: pen.lambda_u,
        lambda_v: pen.lambda_v,
        alpha_u: pen.alpha_u,
        alpha_v: pen.alpha_v,
        penalty_order: pen.penalty_order,
        tune: a.tune,
        max_outer: a.max_outer,
    };

    let (u, v, report) = if a.method == FitMethod::Rank1 {
        let mut rank1 = Rank1Config::new(pen.lambda_u, pen.lambda_v, s_u.clone(), s_v.clone());
        rank1.max_outer = a.max_outer.max(1) * 5;
        let tune = if a.tune { Some(TuneGrid::default_for(&x)?) } else { None };
        let fit = fit_pipeline(
            &x,
            &PipelineConfig {
                k: a.rank,
                rank1,
                // rank 1 without deflation still records one Schur step
                scheme: DeflationScheme::new(deflation.unwrap_or(DeflationKind::Schur)),
                tune,
                penalty_order: pen.penalty_order,
            },
        )?;
        let objective_trace: Vec<f64> = fit.components.iter().map(|c| c.final_objective).collect();
        let final_objective = objective_trace.iter().sum();
        let report = FitReport {
            schema_version: SCHEMA_VERSION,
            method: "rank1",
            deflation,
            rank: a.rank,
            params,
            converged: fit.converged,
            d: fit.d.iter().copied().collect(),
            objective_trace,
            final_objective,
            feasibility_u: fit
                .components
                .iter()
                .zip(fit.u.column_iter())
                .try_fold(0.0_f64, |m, (c, col)| -> Result<f64> {
                    Ok(if c.zero { m } else { m.max((s_norm(&col.into_owned(), &s_u)? - 1.0).abs()) })
                })?,
            feasibility_v: fit
                .components
                .iter()
                .zip(fit.v.column_iter())
                .try_fold(0.0_f64, |m, (c, col)| -> Result<f64> {
                    Ok(if c.zero { m } else { m.max((s_norm(&col.into_owned(), &s_v)? - 1.0).abs()) })
                })?,
            engine_stats: None,
            degenerate: fit.components.iter().any(|c| c.zero),
            components: fit.components.clone(),
        };
        (fit.u, fit.v, report)
    } else {
        let engine = match a.method {
            FitMethod::Madmm => Engine::Madmm,
            FitMethod::Manpg => Engine::Manpg,
            _ => Engine::Amanpg,
        };
        let mut cfg = ManConfig::new(a.rank, pen.lambda_u, pen.lambda_v, s_u.clone(), s_v.clone(), engine);
        cfg.max_outer = a.max_outer;
        let fit = fit_manifold(&x, &cfg)?;
        let report = FitReport {
            schema_version: SCHEMA_VERSION,
            method: engine.name(),
            deflation: None,
            rank: a.rank,
            params,
            converged: fit.converged,
            d: fit.d.iter().copied().collect(),
            objective_trace: fit.objective_trace.clone(),
            final_objective: fit.final_objective,
            feasibility_u: s_u.feasibility_residual(&fit.u),
            feasibility_v: s_v.feasibility_residual(&fit.v),
            engine_stats: Some(fit.engine_stats),
            degenerate: fit.degenerate,
            components: Vec::new(),
        };
        (fit.u, fit.v, report)
    };
    ensure_dir(&a.out)?;
    write_matrix_file(a.out.join("u_hat.csv"), &u)?;
    write_matrix_file(a.out.join("v_hat.csv"), &v)?;
    write_matrix_file(a.out.join("d_hat.csv"), &column(&Vector::from_vec(report.d.clone())))?;
    write_json(&a.out.join("report.json"), &report)?;
    Ok(if report.converged { Outcome::Done } else { Outcome::NotConverged })
}

pub fn cmd_deflate(a: &DeflateArgs) -> Result<Outcome> {
    let kind = a
        .scheme
        .kind()
        .ok_or_else(|| SfpcaError::Config("--scheme none does not deflate".into()))?;
    let x = read_matrix_file(&a.input)?;
    let u = read_matrix_file(&a.u)?;
    let v = read_matrix_file(&a.v)?;
    let scheme = DeflationScheme {
        kind,
        normalize: !a.no_normalize,
    };
    let mut state = DeflationState::new(x)?;
    if a.sequential {
        if u.ncols() != v.ncols() {
            return Err(SfpcaError::Dimension("U and V need the same number of columns".into()));
        }
        for j in 0..u.ncols() {
            state = state.deflate_vector(&u.column(j).into_owned(), &v.column(j).into_owned(), scheme)?;
        }
    } else {
        state = state.deflate_block(&u, &v, scheme)?;
    }
    let report = state.orthogonality_report()?;
    ensure_dir(&a.out)?;
    write_matrix_file(a.out.join("x_deflated.csv"), state.x_current())?;
    #[derive(Serialize)]
    struct Wrapped<'a> {
        schema_version: u32,
        scheme: DeflationScheme,
        #[serde(flatten)]
        report: &'a crate::deflation::OrthogonalityReport,
    }
    write_json(
        &a.out.join("orthogonality.json"),
        &Wrapped {
            schema_version: SCHEMA_VERSION,
            scheme,
            report: &report,
        },
    )?;
    print!("{}", report.to_table());
    Ok(Outcome::Done)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<Outcome> {
    let methods: Vec<Method> = a.methods.clone();
    let mut cfg = BenchConfig::new(a.scenario, a.replicates, a.seed, methods);
    if let Some(snr) = a.snr {
        cfg.target_snr = snr;
    }
    cfg.k = a.rank;
    cfg.lambda_u = a.lambda_u;
    cfg.lambda_v = a.lambda_v;
    cfg.alpha_u = a.alpha_u;
    cfg.alpha_v = a.alpha_v;
    cfg.penalty_order = a.penalty_order;
    cfg.tune = a.tune;
    cfg.record_timing = a.timing;
    cfg.max_outer = a.max_outer;
    let report = run_benchmark(&cfg)?;
    ensure_dir(&a.out)?;
    let mut json = report.to_json()?;
    json.push('\n');
    fs::write(a.out.join("bench.json"), json)?;
    fs::write(a.out.join("bench.csv"), report.to_csv()?)?;
    Ok(Outcome::Done)
}
