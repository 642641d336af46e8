//! `mcca` — command-line front end for multi-set canonical correlation
//! analysis.
//!
//! Subcommands cover the full pipeline: instance generation (`gen`,
//! `rpbasis`), the local solver (`horst`), the semidefinite relaxation
//! (`sdp`), certification (`certify`), kernel MCCA (`kmcca`), and the batch
//! studies (`experiment`, `protocol`). Reports are JSON; traces and grids
//! are CSV. Every source of randomness is controlled by an explicit
//! `--seed`, so identical invocations produce byte-identical outputs.
//!
//! Exit codes: 0 on success, 2 on invalid input or usage errors, 3 when a
//! well-posed solve fails (non-convergence, degenerate extraction).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

use mcca::certificates::{certify_with_thresholds, EventThresholds};
use mcca::generators::{random_projection_basis, GeneratorKind, GeneratorSpec};
use mcca::harness::{
    run_experiment, run_restricted_space_protocol, synthetic_latent_views, ExperimentConfig,
    ProtocolOptions,
};
use mcca::horst::{multi_restart, HorstOptions, MultiRestartResult};
use mcca::io::{load_problem, read_json, read_views, write_json, LoadedKind, ProblemFile};
use mcca::kernel::{evaluate_projections, solve_k_sets, CanonicalSet, DualProblem, KernelSpec};
use mcca::sdp::solve_sdp;
use mcca::tolerances::{ONEDIM_EPSILON, SDP_MAXITER, SDP_TOL};
use mcca::transform::whiten;
use mcca::{BlockStructure, BlockVector, Error, Result, SumcorProblem};

#[derive(Parser)]
#[command(name = "mcca", version, about = "Multi-set canonical correlation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random correlation instance and write it as a problem file.
    Gen(GenArgs),
    /// Build random projection bases from view files.
    Rpbasis(RpbasisArgs),
    /// Run the multi-restart local solver on a problem file.
    Horst(HorstArgs),
    /// Solve the semidefinite relaxation of a problem file.
    Sdp(SdpArgs),
    /// Run the full pipeline (local solver, relaxation, certificates) on a
    /// problem file.
    Certify(CertifyArgs),
    /// Solve kernel MCCA on view files and optionally evaluate held-out views.
    Kmcca(KmccaArgs),
    /// Run a batch event-frequency experiment over random instances.
    Experiment(ExperimentArgs),
    /// Run the restricted-space train/test protocol over a (gamma, kappa) grid.
    Protocol(ProtocolArgs),
}

fn parse_kind(s: &str) -> std::result::Result<GeneratorKind, String> {
    match s {
        "gram" => Ok(GeneratorKind::Gram),
        "spectrum" => Ok(GeneratorKind::Spectrum),
        "onedim" => Ok(GeneratorKind::OneDim),
        other => Err(format!("unknown generator kind {other:?}; expected gram, spectrum, or onedim")),
    }
}

#[derive(Args)]
struct GenArgs {
    /// Sampler: gram, spectrum, or onedim.
    #[arg(long, value_parser = parse_kind)]
    kind: GeneratorKind,
    /// Comma-separated block sizes, e.g. 1,1,1.
    #[arg(long, value_delimiter = ',', required = true)]
    blocks: Vec<usize>,
    /// Noise level for the onedim sampler; ignored otherwise.
    #[arg(long, default_value_t = ONEDIM_EPSILON)]
    epsilon: f64,
    /// RNG seed.
    #[arg(long)]
    seed: u64,
    /// Output problem file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RpbasisArgs {
    /// View files (CSV, rows = dimensions, columns = observations).
    #[arg(long, num_args = 1.., required = true)]
    views: Vec<PathBuf>,
    /// Ridge mixing weight in (0, 1].
    #[arg(long)]
    gamma: f64,
    /// Directions drawn per view pair.
    #[arg(long)]
    k: usize,
    /// RNG seed.
    #[arg(long)]
    seed: u64,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HorstArgs {
    /// Problem file; raw covariance problems are whitened on load.
    #[arg(long)]
    problem: PathBuf,
    /// Random starting points.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Iteration cap per solve.
    #[arg(long, default_value_t = HorstOptions::default().maxiter)]
    maxiter: usize,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = HorstOptions::default().rel_change_stop)]
    rel_change_stop: f64,
    /// RNG seed for the starting points.
    #[arg(long)]
    seed: u64,
    /// Write the best solve's convergence trace to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SdpArgs {
    /// Problem file; raw covariance problems are whitened on load.
    #[arg(long)]
    problem: PathBuf,
    /// Stopping tolerance on residuals and relative objective change.
    #[arg(long, default_value_t = SDP_TOL)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = SDP_MAXITER)]
    maxiter: usize,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Problem file; raw covariance problems are whitened on load.
    #[arg(long)]
    problem: PathBuf,
    /// Local-solver restarts.
    #[arg(long, default_value_t = 1000)]
    restarts: usize,
    /// RNG seed for the local solver.
    #[arg(long)]
    seed: u64,
    /// Relaxation stopping tolerance.
    #[arg(long, default_value_t = SDP_TOL)]
    tol: f64,
    /// Relaxation iteration cap.
    #[arg(long, default_value_t = SDP_MAXITER)]
    maxiter: usize,
    /// Relative duality-gap event threshold.
    #[arg(long, default_value_t = EventThresholds::default().gap)]
    gap: f64,
    /// Relative local-convergence spread threshold.
    #[arg(long, default_value_t = EventThresholds::default().convergence_rel)]
    conv_rel: f64,
    /// Absolute local-convergence spread threshold.
    #[arg(long, default_value_t = EventThresholds::default().convergence_abs)]
    conv_abs: f64,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KmccaArgs {
    /// Training view files (CSV, rows = dimensions, columns = observations).
    #[arg(long, num_args = 1.., required = true)]
    views: Vec<PathBuf>,
    /// Kernel: linear, rbf, or polynomial.
    #[arg(long, default_value = "linear")]
    kernel: String,
    /// Bandwidth for the rbf kernel.
    #[arg(long)]
    sigma: Option<f64>,
    /// Degree for the polynomial kernel.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Offset for the polynomial kernel.
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Shrinkage weight in (0, 1).
    #[arg(long)]
    kappa: f64,
    /// Number of canonical sets.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// RNG seed for the solver.
    #[arg(long)]
    seed: u64,
    /// Held-out view files to evaluate, same number and order as --views.
    #[arg(long, num_args = 1..)]
    test_views: Option<Vec<PathBuf>>,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sampler: gram, spectrum, or onedim.
    #[arg(long, value_parser = parse_kind)]
    kind: GeneratorKind,
    /// Number of views.
    #[arg(long)]
    m: usize,
    /// Dimension of every view.
    #[arg(long)]
    n_i: usize,
    /// Number of random instances.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Local-solver restarts per instance.
    #[arg(long, default_value_t = 1000)]
    restarts: usize,
    /// Master seed.
    #[arg(long)]
    seed: u64,
    /// Noise level for the onedim sampler; ignored otherwise.
    #[arg(long, default_value_t = ONEDIM_EPSILON)]
    epsilon: f64,
    /// Relaxation stopping tolerance.
    #[arg(long, default_value_t = SDP_TOL)]
    sdp_tol: f64,
    /// Relaxation iteration cap.
    #[arg(long, default_value_t = SDP_MAXITER)]
    sdp_maxiter: usize,
    /// Relative duality-gap event threshold.
    #[arg(long, default_value_t = EventThresholds::default().gap)]
    gap: f64,
    /// Relative local-convergence spread threshold.
    #[arg(long, default_value_t = EventThresholds::default().convergence_rel)]
    conv_rel: f64,
    /// Absolute local-convergence spread threshold.
    #[arg(long, default_value_t = EventThresholds::default().convergence_abs)]
    conv_abs: f64,
    /// Drop failed trials from frequency denominators.
    #[arg(long)]
    exclude_failures: bool,
    /// Output JSON file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProtocolArgs {
    /// View files (CSV); mutually exclusive with --synthetic.
    #[arg(long, num_args = 1.., conflicts_with = "synthetic")]
    views: Option<Vec<PathBuf>>,
    /// Generate synthetic latent-signal views instead of reading files.
    #[arg(long)]
    synthetic: bool,
    /// Synthetic: number of views.
    #[arg(long, default_value_t = 3, requires = "synthetic")]
    m: usize,
    /// Synthetic: dimension of every view.
    #[arg(long, default_value_t = 10, requires = "synthetic")]
    n_i: usize,
    /// Synthetic: number of observations.
    #[arg(long, default_value_t = 120, requires = "synthetic")]
    s: usize,
    /// Synthetic: latent signal dimension.
    #[arg(long, default_value_t = 2, requires = "synthetic")]
    latent_dim: usize,
    /// Synthetic: per-view noise level.
    #[arg(long, default_value_t = 0.5, requires = "synthetic")]
    noise: f64,
    /// Comma-separated ridge mixing weights (grid rows).
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    /// Comma-separated shrinkage weights (grid columns).
    #[arg(long, value_delimiter = ',', required = true)]
    kappas: Vec<f64>,
    /// Directions drawn per view pair when building bases.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Seed for the split, the bases, and the solver (and synthetic views).
    #[arg(long)]
    seed: u64,
    /// Fraction of observations assigned to the train split.
    #[arg(long, default_value_t = ProtocolOptions::default().train_fraction)]
    train_fraction: f64,
    /// Output CSV for train sums of correlations.
    #[arg(long)]
    train_out: PathBuf,
    /// Output CSV for test sums of correlations.
    #[arg(long)]
    test_out: PathBuf,
    /// Optional combined JSON report.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => run_gen(args),
        Command::Rpbasis(args) => run_rpbasis(args),
        Command::Horst(args) => run_horst(args),
        Command::Sdp(args) => run_sdp(args),
        Command::Certify(args) => run_certify(args),
        Command::Kmcca(args) => run_kmcca(args),
        Command::Experiment(args) => run_experiment_cmd(args),
        Command::Protocol(args) => run_protocol(args),
    }
}

/// Writes pretty JSON to `out`, or to stdout when no path was given.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn run_gen(args: GenArgs) -> Result<()> {
    let blocks = BlockStructure::new(args.blocks)?;
    let spec = GeneratorSpec { epsilon: args.epsilon, ..GeneratorSpec::new(args.kind, blocks.clone(), args.seed) };
    let correlation = spec.generate()?;
    let problem = SumcorProblem::new(correlation, blocks)?;
    emit(args.out.as_deref(), &ProblemFile::from_sumcor(&problem))
}

fn run_rpbasis(args: RpbasisArgs) -> Result<()> {
    let paths: Vec<&Path> = args.views.iter().map(PathBuf::as_path).collect();
    let views = read_views(&paths)?;
    let bases = random_projection_basis(&views, args.gamma, args.k, args.seed)?;
    emit(args.out.as_deref(), &bases)
}

/// `horst` output: the solver aggregate plus, for covariance inputs, the
/// weights mapped back to the original coordinates and their sum of
/// correlations.
#[derive(Serialize)]
struct HorstReport {
    /// Quadratic-form objective of the best restart.
    objective: f64,
    /// Restarts whose stopping rule fired.
    converged_count: usize,
    /// Final objectives of all restarts.
    objectives: Vec<f64>,
    monotonicity_violations: usize,
    feasibility_violations: usize,
    /// Best iterate in whitened coordinates.
    x: BlockVector,
    /// Sum of pairwise correlations; present when the input was a raw
    /// covariance problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    sumcor: Option<f64>,
    /// Weights in original coordinates; present when the input was a raw
    /// covariance problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<BlockVector>,
}

fn run_horst(args: HorstArgs) -> Result<()> {
    let (problem, kind) = load_problem(&args.problem)?;
    let opts = HorstOptions {
        maxiter: args.maxiter,
        rel_change_stop: args.rel_change_stop,
        seed: args.seed,
    };
    let result = multi_restart(&problem, args.restarts, &opts)?;

    if let Some(path) = &args.trace {
        let mut csv = String::from("iteration,objective,log10_rel_change\n");
        for row in &result.best.trace {
            csv.push_str(&format!("{},{},{}\n", row.iteration, row.objective, row.log10_rel_change));
        }
        std::fs::write(path, csv)?;
    }

    let (sumcor, weights) = match kind {
        LoadedKind::AlreadyWhitened => (None, None),
        LoadedKind::WhitenedOnLoad => {
            // reconstruct the whitening to map the solution back
            let file: ProblemFile = read_json(&args.problem)?;
            let (c, structure) = file.into_parts()?;
            let raw = SumcorProblem::new(c, structure)?;
            let whitening = whiten(&raw)?;
            let weights = whitening.primal_from_whitened(&result.best.x)?;
            (Some(raw.sum_correlations(&weights)?), Some(weights))
        }
    };
    let MultiRestartResult { best, objectives, converged_count, monotonicity_violations, feasibility_violations } =
        result;
    let report = HorstReport {
        objective: best.objective,
        converged_count,
        objectives,
        monotonicity_violations,
        feasibility_violations,
        x: best.x,
        sumcor,
        weights,
    };
    emit(args.out.as_deref(), &report)
}

fn run_sdp(args: SdpArgs) -> Result<()> {
    let (problem, _) = load_problem(&args.problem)?;
    let solution = solve_sdp(&problem, args.tol, args.maxiter)?;
    emit(args.out.as_deref(), &solution)
}

fn run_certify(args: CertifyArgs) -> Result<()> {
    let (problem, _) = load_problem(&args.problem)?;
    let opts = HorstOptions { seed: args.seed, ..HorstOptions::default() };
    let local = multi_restart(&problem, args.restarts, &opts)?;
    let sdp = solve_sdp(&problem, args.tol, args.maxiter)?;
    let thresholds = EventThresholds {
        gap: args.gap,
        convergence_rel: args.conv_rel,
        convergence_abs: args.conv_abs,
        ..EventThresholds::default()
    };
    let report = certify_with_thresholds(&problem, &local.objectives, &sdp, &thresholds)?;
    emit(args.out.as_deref(), &report)
}

/// `kmcca` output: the canonical sets plus per-set sums of correlations on
/// the training data and, when held-out views were given, on those.
#[derive(Serialize)]
struct KmccaReport {
    kappa: f64,
    k: usize,
    /// Per-set regularized training objectives reported by the solver.
    train_objectives: Vec<f64>,
    /// Per-set sums of pairwise correlations on the training views; absent
    /// when the training split is too small to evaluate.
    #[serde(skip_serializing_if = "Option::is_none")]
    train_sumcor: Option<Vec<f64>>,
    /// Per-set sums of pairwise correlations on the held-out views.
    #[serde(skip_serializing_if = "Option::is_none")]
    test_sumcor: Option<Vec<f64>>,
    set: CanonicalSet,
}

fn run_kmcca(args: KmccaArgs) -> Result<()> {
    let spec = match args.kernel.as_str() {
        "linear" => KernelSpec::Linear,
        "rbf" => {
            let sigma = args.sigma.ok_or_else(|| {
                Error::InvalidInput("the rbf kernel requires --sigma".into())
            })?;
            KernelSpec::Rbf { sigma }
        }
        "polynomial" => KernelSpec::Polynomial { degree: args.degree, offset: args.offset },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown kernel {other:?}; expected linear, rbf, or polynomial"
            )))
        }
    };
    let paths: Vec<&Path> = args.views.iter().map(PathBuf::as_path).collect();
    let train = read_views(&paths)?;
    let dual = DualProblem::from_views(&spec, &train, args.kappa)?;
    let set = solve_k_sets(&dual, args.k, &HorstOptions { seed: args.seed, ..HorstOptions::default() })?;

    let (train_sumcor, test_sumcor) = match &args.test_views {
        Some(test_paths) => {
            if test_paths.len() != train.len() {
                return Err(Error::InvalidInput(format!(
                    "got {} held-out views for {} training views",
                    test_paths.len(),
                    train.len()
                )));
            }
            let paths: Vec<&Path> = test_paths.iter().map(PathBuf::as_path).collect();
            let test = read_views(&paths)?;
            let (tr, te) = evaluate_projections(&spec, &train, &test, &set)?;
            (Some(tr), Some(te))
        }
        // evaluating train against itself needs at least three observations
        None if train[0].ncols() >= 3 => {
            let (tr, _) = evaluate_projections(&spec, &train, &train, &set)?;
            (Some(tr), None)
        }
        None => (None, None),
    };
    let report = KmccaReport {
        kappa: args.kappa,
        k: args.k,
        train_objectives: set.train_objectives().to_vec(),
        train_sumcor,
        test_sumcor,
        set,
    };
    emit(args.out.as_deref(), &report)
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let config = ExperimentConfig {
        kind: args.kind,
        m: args.m,
        n_i: args.n_i,
        trials: args.trials,
        restarts: args.restarts,
        thresholds: EventThresholds {
            gap: args.gap,
            convergence_rel: args.conv_rel,
            convergence_abs: args.conv_abs,
            ..EventThresholds::default()
        },
        epsilon: args.epsilon,
        seed: args.seed,
        sdp_tol: args.sdp_tol,
        sdp_maxiter: args.sdp_maxiter,
        horst: HorstOptions::default(),
        exclude_failures: args.exclude_failures,
    };
    let table = run_experiment(&config)?;
    emit(args.out.as_deref(), &table)
}

fn run_protocol(args: ProtocolArgs) -> Result<()> {
    let views: Vec<DMatrix<f64>> = if args.synthetic {
        synthetic_latent_views(args.m, args.n_i, args.s, args.latent_dim, args.noise, args.seed)?
    } else {
        let paths = args.views.as_deref().ok_or_else(|| {
            Error::InvalidInput("pass --views files or --synthetic".into())
        })?;
        let paths: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
        read_views(&paths)?
    };
    let options = ProtocolOptions {
        train_fraction: args.train_fraction,
        ..ProtocolOptions::default()
    };
    let grid = run_restricted_space_protocol(
        &views,
        &args.gammas,
        &args.kappas,
        args.k,
        args.seed,
        &options,
    )?;
    std::fs::write(&args.train_out, format!("# {}\n{}", grid.note, grid.to_csv(&grid.train)))?;
    std::fs::write(&args.test_out, format!("# {}\n{}", grid.note, grid.to_csv(&grid.test)))?;
    if let Some(path) = &args.json {
        write_json(path, &grid)?;
    }
    Ok(())
}
