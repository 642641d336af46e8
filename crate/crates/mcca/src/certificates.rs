//! Global certificates: candidate extraction, bounds on the optimum, and
//! the event flags used by the experiment harness.
//!
//! The relaxation value `psi` from [`crate::sdp`] upper-bounds the quadratic
//! optimum `phi*`, and a constant-accuracy theorem bounds it from below:
//!
//! ```text
//! (2/pi) psi  <=  phi*  <=  psi ,
//! ```
//!
//! with the sharper lower bound `max{(2/pi) omega(m/psi), m/psi} psi` where
//! `omega(beta) = beta asin(beta) + sqrt(1 - beta^2)`. Together with the
//! best local objective these produce machine-checkable statements about how
//! far a local method can still be from the global optimum — without ever
//! knowing the optimum itself.
//!
//! Because the relaxation is solved by a first-order method, every
//! comparison against `psi` accounts for the reported `primal_residual`:
//! thresholds that treat `psi` as an upper bound are deflated by ten times
//! the residual, so solver slack can inflate no event flag.

use serde::{Deserialize, Serialize};

use crate::block::BlockVector;
use crate::error::{Error, Result};
use crate::model::QcqpProblem;
use crate::sdp::SdpSolution;
use crate::tolerances::{
    EXTRACTION_BLOCK_NORM_TOL, LOCAL_CONVERGENCE_ABS, LOCAL_CONVERGENCE_REL,
    PSI_RANGE_TOL_FACTOR, RESIDUAL_INFLATION,
};

/// The weight `omega(beta) = beta * asin(beta) + sqrt(1 - beta^2)` of the
/// improved lower bound, defined for `beta` in `[0, 1]` with `omega(0) = 1`
/// and `omega(1) = pi/2`. Outside the domain the result is NaN.
pub fn omega(beta: f64) -> f64 {
    beta * beta.asin() + (1.0 - beta * beta).sqrt()
}

/// Projects the leading eigenvector of the relaxation solution onto the
/// feasible set and evaluates it.
///
/// The projection normalizes every block of the eigenvector; it is defined
/// only when every block has strictly positive norm (an assumption that is
/// conjectured but not proven to always hold). A block with norm at or below
/// `1e-12` fails with [`Error::AssumptionViolated`] — reported, never
/// patched.
pub fn extract_candidate(
    sol: &SdpSolution,
    problem: &QcqpProblem,
) -> Result<(BlockVector, f64)> {
    let n = problem.total_dim();
    if sol.eigenvectors.nrows() != n || sol.eigenvectors.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "solution eigenvectors are {}x{}, problem has dimension {n}",
            sol.eigenvectors.nrows(),
            sol.eigenvectors.ncols()
        )));
    }
    let leading = sol.eigenvectors.column(0).into_owned();
    let mut x = BlockVector::new(leading, problem.structure().clone())?;
    for i in 0..problem.num_blocks() {
        let norm = x.block_norm(i);
        if norm <= EXTRACTION_BLOCK_NORM_TOL {
            return Err(Error::AssumptionViolated { block: i, norm });
        }
    }
    x.normalize_blocks()?;
    let objective = problem.objective(&x)?;
    Ok((x, objective))
}

/// The spectral upper bound `m * ||A||_2`, obtained by relaxing the block
/// constraints to the single constraint `x^T x = m`.
pub fn l2_norm_bound(problem: &QcqpProblem) -> f64 {
    problem.num_blocks() as f64 * problem.spectral_norm()
}

/// Checks the structural range `m <= psi <= m^2` up to `1e-6 * m^2` slack.
///
/// The lower end is attained at zero correlation and the upper end at
/// perfect correlation, so any valid relaxation value must fall in between.
pub fn psi_range_check(psi: f64, m: usize) -> bool {
    let m = m as f64;
    let tol = PSI_RANGE_TOL_FACTOR * m * m;
    (m - tol..=m * m + tol).contains(&psi)
}

/// The lower bounds derived from a relaxation value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelativeAccuracyBounds {
    /// `(2/pi) psi`.
    pub base: f64,
    /// `max{(2/pi) omega(m/psi), m/psi} * psi`; always at least `base`.
    pub improved: f64,
    /// The corollary bound on the sum-of-correlations scale,
    /// `(2/pi) psi~ - (1 - 2/pi) m/2` with `psi~ = (psi - m)/2`.
    pub sumcor_scale: f64,
}

/// Evaluates the constant-accuracy lower bounds at a relaxation value.
///
/// Requires `psi >= m` (the structural minimum); smaller values mean the
/// inputs are mutually inconsistent.
pub fn relative_accuracy_bounds(psi: f64, m: usize) -> Result<RelativeAccuracyBounds> {
    let mf = m as f64;
    if psi < mf {
        return Err(Error::InconsistentCertificate(format!(
            "relaxation value {psi} below the structural minimum {mf}"
        )));
    }
    let two_over_pi = std::f64::consts::FRAC_2_PI;
    let beta = (mf / psi).min(1.0);
    let base = two_over_pi * psi;
    let improved = (two_over_pi * omega(beta)).max(beta) * psi;
    let psi_tilde = (psi - mf) / 2.0;
    let sumcor_scale = two_over_pi * psi_tilde - (1.0 - two_over_pi) * mf / 2.0;
    Ok(RelativeAccuracyBounds { base, improved, sumcor_scale })
}

/// A-posteriori bound on the extraction gap `psi - phi(pi(x1))` from the
/// spectrum of the relaxation solution.
///
/// Applicable when `lambda_1 > 1 > tail` for `tail` the sum of all
/// non-leading eigenvalues; returns `None` otherwise. The bound is
/// `(1/(1 - tail) - 1) m^2 + tail ||A||_2`, which vanishes for rank-one
/// solutions — extraction is then exact.
pub fn rank2_gap_bound(sol: &SdpSolution, problem: &QcqpProblem) -> Option<f64> {
    if sol.eigenvalues.is_empty() {
        return None;
    }
    let lambda_1 = sol.eigenvalues[0];
    let tail: f64 = sol.eigenvalues.iter().skip(1).sum();
    if lambda_1 > 1.0 && tail < 1.0 {
        let m = problem.num_blocks() as f64;
        Some((1.0 / (1.0 - tail) - 1.0) * m * m + tail * problem.spectral_norm())
    } else {
        None
    }
}

/// Event thresholds; defaults are the values used in the reference
/// experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventThresholds {
    /// Duality-gap candidate: flag when the best local objective is more
    /// than this fraction below the relaxation value.
    pub gap: f64,
    /// Local-convergence event: two objectives must differ by this fraction
    /// of the larger one ...
    pub convergence_rel: f64,
    /// ... and by this absolute amount.
    pub convergence_abs: f64,
    /// Lower-bound event: flag when the best local objective falls below
    /// this fraction of the relaxation value.
    pub lower_bound_factor: f64,
}

impl Default for EventThresholds {
    fn default() -> Self {
        Self {
            gap: 0.01,
            convergence_rel: LOCAL_CONVERGENCE_REL,
            convergence_abs: LOCAL_CONVERGENCE_ABS,
            lower_bound_factor: std::f64::consts::FRAC_2_PI,
        }
    }
}

/// The three per-instance event flags aggregated by the harness.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertificateEvents {
    /// Best local objective more than the gap threshold below `psi`: either
    /// a true duality gap or every restart stuck in local optima.
    pub duality_gap_candidate: bool,
    /// Two restarts converged to meaningfully different objectives.
    pub local_convergence: bool,
    /// Best local objective below the guaranteed lower bound on the global
    /// optimum — proof of being trapped.
    pub below_lower_bound: bool,
}

/// Everything the certificate machinery can say about one solved instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Relaxation value.
    pub psi: f64,
    /// Constraint violation reported by the relaxation solver.
    pub primal_residual: f64,
    /// Best local objective among the supplied restarts.
    pub phi_best_local: f64,
    /// Objective of the extracted candidate `pi(x1)`, absent when the
    /// extraction assumption failed.
    pub extracted_objective: Option<f64>,
    /// Spectral upper bound `m ||A||_2`.
    pub l2_bound: f64,
    /// Whether `psi` passed the structural range check.
    pub psi_range_ok: bool,
    /// Baseline lower bound `(2/pi) psi` on the global optimum.
    pub lower_bound_2pi: f64,
    /// Improved lower bound; at least `lower_bound_2pi`.
    pub lower_bound_improved: f64,
    /// Lower bound restated on the sum-of-correlations scale.
    pub lower_bound_sumcor_scale: f64,
    /// A-posteriori extraction-gap bound, when applicable.
    pub rank2_gap_bound: Option<f64>,
    /// Event flags.
    pub events: CertificateEvents,
    /// Whether the leading eigenvector had all blocks nonzero.
    pub assumption1_ok: bool,
}

/// Assembles a certificate report with default thresholds.
///
/// `local_objectives` are the final objectives of the local restarts (at
/// least one). Extraction failures surface as `assumption1_ok = false` with
/// an absent extracted objective; they do not abort the report.
pub fn certify(
    problem: &QcqpProblem,
    local_objectives: &[f64],
    sol: &SdpSolution,
) -> Result<CertificateReport> {
    certify_with_thresholds(problem, local_objectives, sol, &EventThresholds::default())
}

/// [`certify`] with explicit event thresholds.
pub fn certify_with_thresholds(
    problem: &QcqpProblem,
    local_objectives: &[f64],
    sol: &SdpSolution,
    thresholds: &EventThresholds,
) -> Result<CertificateReport> {
    if local_objectives.is_empty() {
        return Err(Error::InvalidInput("need at least one local solution".into()));
    }
    if local_objectives.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("local objectives contain non-finite values".into()));
    }

    let m = problem.num_blocks();
    let mf = m as f64;
    let psi = sol.psi;
    let residual_slack = RESIDUAL_INFLATION * sol.primal_residual;

    let (extracted_objective, assumption1_ok) = match extract_candidate(sol, problem) {
        Ok((_, objective)) => (Some(objective), true),
        Err(Error::AssumptionViolated { .. }) => (None, false),
        Err(other) => return Err(other),
    };

    // Bounds are evaluated at psi clamped up to the structural minimum m: a
    // first-order solver may undershoot m by its own slack on
    // zero-correlation instances. Anything further below is a real
    // inconsistency.
    if psi < mf - residual_slack - PSI_RANGE_TOL_FACTOR * mf * mf {
        return Err(Error::InconsistentCertificate(format!(
            "relaxation value {psi} below the structural minimum {mf} by more than solver slack"
        )));
    }
    let bounds = relative_accuracy_bounds(psi.max(mf), m)?;

    let phi_best_local = local_objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi_worst_local = local_objectives.iter().copied().fold(f64::INFINITY, f64::min);

    // psi acts as an upper bound in the event comparisons; deflate it by the
    // residual slack so no flag can fire on solver error alone
    let psi_event = psi - residual_slack;
    let duality_gap_candidate = phi_best_local < (1.0 - thresholds.gap) * psi_event;
    let below_lower_bound = phi_best_local < thresholds.lower_bound_factor * psi_event;
    let spread = phi_best_local - phi_worst_local;
    let local_convergence = spread >= thresholds.convergence_abs
        && phi_best_local > 0.0
        && spread / phi_best_local >= thresholds.convergence_rel;

    Ok(CertificateReport {
        psi,
        primal_residual: sol.primal_residual,
        phi_best_local,
        extracted_objective,
        l2_bound: l2_norm_bound(problem),
        psi_range_ok: psi_range_check(psi, m),
        lower_bound_2pi: bounds.base,
        lower_bound_improved: bounds.improved,
        lower_bound_sumcor_scale: bounds.sumcor_scale,
        rank2_gap_bound: rank2_gap_bound(sol, problem),
        events: CertificateEvents { duality_gap_candidate, local_convergence, below_lower_bound },
        assumption1_ok,
    })
}
