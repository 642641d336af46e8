//! Experiment orchestration: event-frequency studies over random instances
//! and the restricted-space train/test protocol.
//!
//! [`run_experiment`] reproduces the synthetic studies behind the
//! certificate machinery: draw random correlation instances, run the local
//! solver from many starting points, solve the relaxation, and count how
//! often each certificate event fires across trials. Every trial derives its
//! own seed from `(seed, trial index)`, so runs are reproducible and trials
//! are order-independent under parallel execution.
//!
//! [`run_restricted_space_protocol`] measures how well correlation found in
//! a reduced random-projection space generalizes: split observations into
//! train and test, build projection bases on the train split, reduce both,
//! then solve kernel MCCA (linear kernel) on the reduced train data and
//! evaluate the sum of correlations on both splits for every `(gamma,
//! kappa)` grid cell. The original study used a parallel corpus; this crate
//! substitutes synthetic multi-view data (see [`synthetic_latent_views`])
//! and says so in the emitted grid.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{certify_with_thresholds, CertificateReport, EventThresholds};
use crate::error::{Error, Result};
use crate::generators::{random_projection_basis, GeneratorKind, GeneratorSpec};
use crate::horst::{multi_restart, HorstOptions};
use crate::kernel::{evaluate_projections, solve_k_sets, DualProblem, KernelSpec};
use crate::model::SumcorProblem;
use crate::sdp::solve_sdp;
use crate::tolerances::{ONEDIM_EPSILON, SDP_MAXITER, SDP_TOL};
use crate::transform::whiten;
use crate::util::{derive_seed, gaussian_matrix};
use crate::BlockStructure;

/// Configuration of one event-frequency experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Correlation-matrix sampler.
    pub kind: GeneratorKind,
    /// Number of views.
    pub m: usize,
    /// Dimension of every view (views share one dimension).
    pub n_i: usize,
    /// Number of random instances.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Local-solver restarts per instance.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Event thresholds.
    #[serde(default)]
    pub thresholds: EventThresholds,
    /// Noise level for the `onedim` sampler; ignored otherwise.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Master seed; trial seeds derive from it.
    pub seed: u64,
    /// Relaxation solver tolerance.
    #[serde(default = "default_sdp_tol")]
    pub sdp_tol: f64,
    /// Relaxation solver iteration cap.
    #[serde(default = "default_sdp_maxiter")]
    pub sdp_maxiter: usize,
    /// Local solver options; the seed field is overridden per trial.
    #[serde(default)]
    pub horst: HorstOptions,
    /// When true, failed trials are dropped from frequency denominators
    /// instead of counting as event-free trials.
    #[serde(default)]
    pub exclude_failures: bool,
}

fn default_trials() -> usize {
    100
}

fn default_restarts() -> usize {
    1000
}

fn default_epsilon() -> f64 {
    ONEDIM_EPSILON
}

fn default_sdp_tol() -> f64 {
    SDP_TOL
}

fn default_sdp_maxiter() -> usize {
    SDP_MAXITER
}

impl ExperimentConfig {
    /// A config with the reference trial and restart counts.
    pub fn new(kind: GeneratorKind, m: usize, n_i: usize, seed: u64) -> Self {
        Self {
            kind,
            m,
            n_i,
            trials: default_trials(),
            restarts: default_restarts(),
            thresholds: EventThresholds::default(),
            epsilon: ONEDIM_EPSILON,
            seed,
            sdp_tol: SDP_TOL,
            sdp_maxiter: SDP_MAXITER,
            horst: HorstOptions::default(),
            exclude_failures: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidInput(format!("need at least two views, got {}", self.m)));
        }
        if self.n_i == 0 {
            return Err(Error::InvalidInput("view dimension must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("need at least one trial".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("need at least one restart".into()));
        }
        if !(self.sdp_tol > 0.0) || self.sdp_maxiter == 0 {
            return Err(Error::InvalidInput("relaxation solver parameters out of range".into()));
        }
        Ok(())
    }
}

/// Event frequencies over the trials of one experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventFrequencies {
    /// Fraction of trials flagged as possible duality gaps.
    pub duality_gap: f64,
    /// Fraction of trials where restarts converged to different objectives.
    pub local_convergence: f64,
    /// Fraction of trials with the best local objective provably below the
    /// global optimum.
    pub below_lower_bound: f64,
}

/// Outcome of a single trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Trial index.
    pub trial: usize,
    /// Seed the instance and solves were derived from.
    pub seed: u64,
    /// The certificate report, absent when the trial failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CertificateReport>,
    /// The failure, absent when the trial succeeded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Restarts whose stopping rule fired.
    pub horst_converged: usize,
    /// Objective-decrease violations over all restarts (should be zero).
    pub monotonicity_violations: usize,
    /// Feasibility violations over all restarts (should be zero).
    pub feasibility_violations: usize,
}

/// Aggregated result of [`run_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// The configuration that produced this table.
    pub config: ExperimentConfig,
    /// Event frequencies (event counts over trials; see
    /// `config.exclude_failures` for the denominator convention).
    pub freq: EventFrequencies,
    /// Number of failed trials.
    pub failures: usize,
    /// Trials whose extraction assumption failed.
    pub assumption_violations: usize,
    /// Per-trial reports in trial order.
    pub trials: Vec<TrialRecord>,
}

/// Runs one event-frequency experiment: per trial, generate an instance,
/// whiten it, run the multi-restart local solver, solve the relaxation, and
/// certify. Trials run in parallel; the output is deterministic for a fixed
/// config.
///
/// A trial that fails inside a solver is recorded with its error message and
/// counts toward no event; set `config.exclude_failures` to also drop it
/// from the frequency denominators.
pub fn run_experiment(config: &ExperimentConfig) -> Result<FrequencyTable> {
    config.validate()?;
    let blocks = BlockStructure::uniform(config.m, config.n_i)?;

    let trials: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &blocks, trial))
        .collect::<Result<_>>()?;

    let failures = trials.iter().filter(|t| t.error.is_some()).count();
    let denominator = if config.exclude_failures {
        config.trials - failures
    } else {
        config.trials
    };
    let count = |event: fn(&CertificateReport) -> bool| {
        trials.iter().filter_map(|t| t.report.as_ref()).filter(|r| event(r)).count()
    };
    let freq_of = |n: usize| if denominator == 0 { 0.0 } else { n as f64 / denominator as f64 };
    let freq = EventFrequencies {
        duality_gap: freq_of(count(|r| r.events.duality_gap_candidate)),
        local_convergence: freq_of(count(|r| r.events.local_convergence)),
        below_lower_bound: freq_of(count(|r| r.events.below_lower_bound)),
    };
    let assumption_violations = count(|r| !r.assumption1_ok);

    Ok(FrequencyTable { config: config.clone(), freq, failures, assumption_violations, trials })
}

/// Generates, solves, and certifies one trial. Solver failures land in the
/// record's `error`; infrastructure errors (invalid config, impossible
/// shapes) propagate.
fn run_trial(config: &ExperimentConfig, blocks: &BlockStructure, trial: usize) -> Result<TrialRecord> {
    let seed = derive_seed(config.seed, trial as u64);
    let spec = GeneratorSpec {
        kind: config.kind,
        blocks: blocks.clone(),
        epsilon: config.epsilon,
        seed,
    };
    let correlation = spec.generate()?;
    let sumcor = SumcorProblem::new(correlation, blocks.clone())?;
    let whitening = whiten(&sumcor)?;
    let problem = whitening.problem();

    let opts = HorstOptions { seed, ..config.horst.clone() };
    let local = multi_restart(problem, config.restarts, &opts)?;

    let mut record = TrialRecord {
        trial,
        seed,
        report: None,
        error: None,
        horst_converged: local.converged_count,
        monotonicity_violations: local.monotonicity_violations,
        feasibility_violations: local.feasibility_violations,
    };
    let certified = solve_sdp(problem, config.sdp_tol, config.sdp_maxiter).and_then(|sol| {
        certify_with_thresholds(problem, &local.objectives, &sol, &config.thresholds)
    });
    match certified {
        Ok(report) => record.report = Some(report),
        Err(e) if e.is_solver_failure() => record.error = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Options for [`run_restricted_space_protocol`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolOptions {
    /// Fraction of observations assigned to the train split; the reference
    /// protocol used five train observations per test observation.
    pub train_fraction: f64,
    /// Local solver options for the kernel solves; the seed field is
    /// overridden per grid cell.
    pub horst: HorstOptions,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self { train_fraction: 5.0 / 6.0, horst: HorstOptions::default() }
    }
}

/// Train/test sums of correlations over a `(gamma, kappa)` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolGrid {
    /// Provenance note for the data the grid was computed on.
    pub note: String,
    /// Ridge parameters, one per grid row.
    pub gammas: Vec<f64>,
    /// Shrinkage weights, one per grid column.
    pub kappas: Vec<f64>,
    /// Train sums of correlations, `train[gamma_index][kappa_index]`.
    pub train: Vec<Vec<f64>>,
    /// Test sums of correlations, same layout.
    pub test: Vec<Vec<f64>>,
}

impl ProtocolGrid {
    /// Renders one half of the grid (train or test) as CSV with gamma rows
    /// and kappa columns.
    pub fn to_csv(&self, values: &[Vec<f64>]) -> String {
        let mut out = String::from("gamma");
        for kappa in &self.kappas {
            out.push_str(&format!(",kappa={kappa}"));
        }
        out.push('\n');
        for (gi, gamma) in self.gammas.iter().enumerate() {
            out.push_str(&format!("{gamma}"));
            for value in &values[gi] {
                out.push_str(&format!(",{value}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Note attached to every protocol grid: the reference study ran on a
/// parallel text corpus, which this crate does not ship.
pub const SYNTHETIC_SUBSTITUTE_NOTE: &str = "Computed on synthetic multi-view data \
(shared latent signal plus per-view noise), not on a parallel text corpus; absolute \
values are not comparable to corpus results, trends are.";

/// Runs the restricted-space protocol on joint observations.
///
/// The observations (columns of each view, shared across views) are split
/// once into train and test using `split_seed`. For every `gamma`,
/// projection bases are built on the train split and both splits are reduced
/// to `m * k` dimensions per view; for every `kappa`, kernel MCCA (linear
/// kernel, one canonical set) is solved on the reduced train split and
/// evaluated on both splits.
pub fn run_restricted_space_protocol(
    views: &[DMatrix<f64>],
    gammas: &[f64],
    kappas: &[f64],
    k: usize,
    split_seed: u64,
    options: &ProtocolOptions,
) -> Result<ProtocolGrid> {
    if views.len() < 2 {
        return Err(Error::InvalidInput("need at least two views".into()));
    }
    if gammas.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidInput("need at least one gamma and one kappa".into()));
    }
    if !(0.0 < options.train_fraction && options.train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie in (0, 1), got {}",
            options.train_fraction
        )));
    }
    let s = views[0].ncols();
    if views.iter().any(|v| v.ncols() != s) {
        return Err(Error::InvalidInput("views must share one observation count".into()));
    }

    let (train_idx, test_idx) = split_indices(s, options.train_fraction, split_seed);
    if train_idx.len() < 2 || test_idx.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "split of {s} observations leaves {} train and {} test; need at least 2 and 3",
            train_idx.len(),
            test_idx.len()
        )));
    }
    let train_views: Vec<DMatrix<f64>> = views.iter().map(|v| v.select_columns(&train_idx)).collect();
    let test_views: Vec<DMatrix<f64>> = views.iter().map(|v| v.select_columns(&test_idx)).collect();

    let mut train = Vec::with_capacity(gammas.len());
    let mut test = Vec::with_capacity(gammas.len());
    for (gi, &gamma) in gammas.iter().enumerate() {
        let basis_seed = derive_seed(split_seed, 1 + gi as u64);
        let bases = random_projection_basis(&train_views, gamma, k, basis_seed)?;
        let reduced_train = bases.reduce_views(&train_views)?;
        let reduced_test = bases.reduce_views(&test_views)?;

        let mut train_row = Vec::with_capacity(kappas.len());
        let mut test_row = Vec::with_capacity(kappas.len());
        for (ki, &kappa) in kappas.iter().enumerate() {
            let dual = DualProblem::from_views(&KernelSpec::Linear, &reduced_train, kappa)?;
            let cell_seed = derive_seed(basis_seed, 1 + ki as u64);
            let opts = HorstOptions { seed: cell_seed, ..options.horst.clone() };
            let set = solve_k_sets(&dual, 1, &opts)?;
            let (tr, te) =
                evaluate_projections(&KernelSpec::Linear, &reduced_train, &reduced_test, &set)?;
            train_row.push(tr[0]);
            test_row.push(te[0]);
        }
        train.push(train_row);
        test.push(test_row);
    }

    Ok(ProtocolGrid {
        note: SYNTHETIC_SUBSTITUTE_NOTE.to_string(),
        gammas: gammas.to_vec(),
        kappas: kappas.to_vec(),
        train,
        test,
    })
}

/// Deterministic shuffled split of `0..s` into train and test index sets
/// (both sorted ascending).
fn split_indices(s: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut indices: Vec<usize> = (0..s).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    indices.shuffle(&mut rng);
    let n_train = ((s as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, s.saturating_sub(1));
    let mut train: Vec<usize> = indices[..n_train].to_vec();
    let mut test: Vec<usize> = indices[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Synthetic multi-view data: every view is a random linear image of one
/// shared latent signal plus independent Gaussian noise.
///
/// Returns `m` views of shape `n_i x s`. With `noise = 0` the views are
/// exact linear images; larger values bury the shared signal.
pub fn synthetic_latent_views(
    m: usize,
    n_i: usize,
    s: usize,
    latent_dim: usize,
    noise: f64,
    seed: u64,
) -> Result<Vec<DMatrix<f64>>> {
    if m < 2 || n_i == 0 || latent_dim == 0 {
        return Err(Error::InvalidInput(
            "need at least two views with positive view and latent dimensions".into(),
        ));
    }
    if s < 2 {
        return Err(Error::InvalidInput(format!("need at least two observations, got {s}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be nonnegative, got {noise}")));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let latent = gaussian_matrix(&mut rng, latent_dim, s);
    Ok((0..m)
        .map(|_| {
            let mixing = gaussian_matrix(&mut rng, n_i, latent_dim);
            let noise_term = gaussian_matrix(&mut rng, n_i, s) * noise;
            &mixing * &latent + noise_term
        })
        .collect())
}
