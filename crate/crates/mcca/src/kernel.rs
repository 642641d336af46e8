//! Dual (kernel) formulation with shrinkage regularization and deflation.
//!
//! When views live in high-dimensional or implicit feature spaces, the
//! correlation problem is restated over dual coefficients: each view `i`
//! contributes an `s x s` Gram matrix `K_i` of kernel evaluations between
//! its `s` observations, and the canonical vector for view `i` is carried by
//! a dual vector `y^(i)` through the representer property `w^(i) = X~^(i)
//! y^(i)`.
//!
//! Regularized variances are approximated to first order by the factor
//!
//! ```text
//! K~_i = sqrt((1 - kappa)/(s - 1)) K_i + (kappa/2) sqrt((s - 1)/(1 - kappa)) I ,
//! ```
//!
//! so the substitution `z^(i) = K~_i y^(i)` turns the constraints into unit
//! norms and the problem into the same block-constrained QCQP the rest of
//! the crate solves — with diagonal blocks `(1/(1 - kappa)) I` instead of
//! identity, which the solvers accept unchanged.
//!
//! Additional canonical sets come from deflation: after each solve the
//! search continues in the orthogonal complement of the found `z` vectors,
//! enforced through projectors `P_i = I - Z^(i) Z^(i)T` baked into the
//! blocks of the deflated matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{BlockStructure, BlockVector};
use crate::error::{Error, Result};
use crate::horst::{self, HorstOptions, LocalSolution};
use crate::io::ViewData;
use crate::model::QcqpProblem;
use crate::tolerances::{
    ASYMMETRY_TOL, KERNEL_RESTARTS, ORTHONORMALITY_TOL, PSD_EIG_TOL, ZERO_NORM_FLOOR,
};
use crate::util::{center_rows, derive_seed, gaussian_vector, max_abs, rel_asymmetry, symmetrize};

/// Kernel function for Gram-matrix construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// Plain inner products; reproduces the primal problem in dual form.
    Linear,
    /// Gaussian kernel `exp(-||a - b||^2 / (2 sigma^2))`.
    Rbf {
        /// Bandwidth; positive.
        sigma: f64,
    },
    /// Polynomial kernel `(a . b + offset)^degree`.
    Polynomial {
        /// Exponent; at least 1.
        degree: u32,
        /// Additive constant; nonnegative (required for positive
        /// semidefiniteness).
        offset: f64,
    },
}

impl KernelSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("rbf bandwidth must be positive, got {sigma}")))
                }
            }
            KernelSpec::Polynomial { degree, offset } => {
                if degree < 1 {
                    Err(Error::InvalidInput("polynomial degree must be at least 1".into()))
                } else if !offset.is_finite() || offset < 0.0 {
                    Err(Error::InvalidInput(format!(
                        "polynomial offset must be nonnegative, got {offset}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Raw (uncentered) kernel evaluations between the columns of `a` and the
/// columns of `b`: entry `(p, q)` is `k(a_p, b_q)`.
pub(crate) fn kernel_matrix(
    spec: &KernelSpec,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidInput(format!(
            "kernel arguments have {} and {} feature dimensions",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("kernel arguments contain non-finite values".into()));
    }
    let inner = a.transpose() * b;
    Ok(match *spec {
        KernelSpec::Linear => inner,
        KernelSpec::Rbf { sigma } => {
            let an: Vec<f64> = a.column_iter().map(|c| c.norm_squared()).collect();
            let bn: Vec<f64> = b.column_iter().map(|c| c.norm_squared()).collect();
            DMatrix::from_fn(a.ncols(), b.ncols(), |p, q| {
                let d2 = (an[p] + bn[q] - 2.0 * inner[(p, q)]).max(0.0);
                (-d2 / (2.0 * sigma * sigma)).exp()
            })
        }
        KernelSpec::Polynomial { degree, offset } => inner.map(|v| (v + offset).powi(degree as i32)),
    })
}

/// Double-centers kernel evaluations of arbitrary points against the
/// training set, so the implicit feature map is centered at the training
/// mean: `r` holds raw kernel values (rows = evaluation points, columns =
/// training points) and `k_raw` is the raw training Gram matrix.
fn center_against_train(r: &DMatrix<f64>, k_raw: &DMatrix<f64>) -> DMatrix<f64> {
    let s = k_raw.nrows() as f64;
    let row_means: Vec<f64> = (0..r.nrows()).map(|p| r.row(p).sum() / s).collect();
    let col_means: Vec<f64> = (0..k_raw.ncols()).map(|q| k_raw.column(q).sum() / s).collect();
    let total = k_raw.sum() / (s * s);
    DMatrix::from_fn(r.nrows(), r.ncols(), |p, q| r[(p, q)] - row_means[p] - col_means[q] + total)
}

/// Centered Gram matrix of one view (`n_i x s`, columns are observations).
///
/// Kernel evaluations are double-centered — the implicit feature vectors are
/// shifted to zero mean — and eigenvalues driven slightly negative by
/// roundoff are clipped to zero, so the result is symmetric PSD.
pub fn gram(spec: &KernelSpec, view: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if view.ncols() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least two observations to center a Gram matrix, got {}",
            view.ncols()
        )));
    }
    let raw = symmetrize(&kernel_matrix(spec, view, view)?);
    let centered = symmetrize(&center_against_train(&raw, &raw));

    // clip roundoff negatives so downstream PSD validation cannot trip
    let eig = centered.symmetric_eigen();
    let s = eig.eigenvalues.len();
    let mut clipped = DMatrix::zeros(s, s);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(idx);
            // clipped += lambda * v v^T, lower triangle then mirror
            for c in 0..s {
                let vc = v[c] * lambda;
                for r in c..s {
                    clipped[(r, c)] += v[r] * vc;
                }
            }
        }
    }
    for c in 0..s {
        for r in (c + 1)..s {
            clipped[(c, r)] = clipped[(r, c)];
        }
    }
    Ok(clipped)
}

/// The first-order regularized variance factor
/// `K~ = sqrt((1 - kappa)/(s - 1)) K + (kappa/2) sqrt((s - 1)/(1 - kappa)) I`.
///
/// `kappa` must lie strictly inside `(0, 1)`; at the endpoints the formula
/// degenerates (the `kappa -> 0` limit is plain `K / sqrt(s - 1)`, which
/// this factor approaches continuously).
pub fn regularized_factor(k: &DMatrix<f64>, kappa: f64) -> Result<DMatrix<f64>> {
    let s = k.nrows();
    if !k.is_square() || s < 2 {
        return Err(Error::InvalidInput(format!(
            "Gram matrix must be square with at least two observations, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidInput(format!(
            "shrinkage weight must lie strictly in (0, 1), got {kappa}"
        )));
    }
    let denom = (s - 1) as f64;
    let scale = ((1.0 - kappa) / denom).sqrt();
    let shift = (kappa / 2.0) * (denom / (1.0 - kappa)).sqrt();
    let mut factor = k * scale;
    for d in 0..s {
        factor[(d, d)] += shift;
    }
    Ok(factor)
}

/// The dual problem: per-view centered Gram matrices with their shrinkage
/// factors, validated and factorized once.
#[derive(Debug, Clone)]
pub struct DualProblem {
    grams: Vec<DMatrix<f64>>,
    factors: Vec<DMatrix<f64>>,
    factor_chol: Vec<Cholesky<f64, Dyn>>,
    kappa: f64,
    s: usize,
}

impl DualProblem {
    /// Builds the dual problem from pre-computed centered Gram matrices.
    ///
    /// Each matrix must be square of a shared size `s >= 2`, symmetric, and
    /// PSD within `1e-8` of its scale. The shrinkage factors and their
    /// Cholesky factorizations are computed here and reused for every solve.
    pub fn new(grams: Vec<DMatrix<f64>>, kappa: f64) -> Result<Self> {
        if grams.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two views, got {}",
                grams.len()
            )));
        }
        let s = grams[0].nrows();
        for (i, k) in grams.iter().enumerate() {
            if !k.is_square() || k.nrows() != s || s < 2 {
                return Err(Error::InvalidInput(format!(
                    "Gram matrix {i} is {}x{}; all must be square of shared size >= 2",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if k.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Gram matrix {i} contains non-finite values"
                )));
            }
            let asym = rel_asymmetry(k);
            if asym > ASYMMETRY_TOL {
                return Err(Error::Asymmetric { relative: asym, tolerance: ASYMMETRY_TOL });
            }
            let scale = max_abs(k).max(1.0);
            let min_eig = k.clone().symmetric_eigen().eigenvalues.min();
            if min_eig < -PSD_EIG_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "Gram matrix {i} is not positive semidefinite (eigenvalue {min_eig:.3e})"
                )));
            }
        }
        let grams: Vec<DMatrix<f64>> = grams.iter().map(symmetrize).collect();
        let mut factors = Vec::with_capacity(grams.len());
        let mut factor_chol = Vec::with_capacity(grams.len());
        for (i, k) in grams.iter().enumerate() {
            let factor = regularized_factor(k, kappa)?;
            let chol = factor
                .clone()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { block: i })?;
            factors.push(factor);
            factor_chol.push(chol);
        }
        Ok(Self { grams, factors, factor_chol, kappa, s })
    }

    /// Builds the dual problem directly from views (`n_i x s` matrices of
    /// shared sample count `s`), computing centered Gram matrices with the
    /// given kernel.
    pub fn from_views(spec: &KernelSpec, views: &[DMatrix<f64>], kappa: f64) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two views, got {}",
                views.len()
            )));
        }
        let s = views[0].ncols();
        for (i, v) in views.iter().enumerate() {
            if v.ncols() != s {
                return Err(Error::InvalidInput(format!(
                    "view {i} has {} observations, view 0 has {s}",
                    v.ncols()
                )));
            }
        }
        let grams = views.iter().map(|v| gram(spec, v)).collect::<Result<Vec<_>>>()?;
        Self::new(grams, kappa)
    }

    /// Number of views.
    pub fn num_views(&self) -> usize {
        self.grams.len()
    }

    /// Shared observation count `s`.
    pub fn sample_count(&self) -> usize {
        self.s
    }

    /// Shrinkage weight.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Centered Gram matrix of view `i`.
    pub fn gram(&self, i: usize) -> &DMatrix<f64> {
        &self.grams[i]
    }

    /// Shrinkage factor `K~_i` of view `i`.
    pub fn factor(&self, i: usize) -> &DMatrix<f64> {
        &self.factors[i]
    }

    /// Applies `K~_i^-1` to the columns of `rhs` via the cached Cholesky
    /// factorization.
    fn solve_factor(&self, i: usize, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor_chol[i].solve(rhs)
    }
}

/// Assembles the deflated dual QCQP matrix for the current deflation bases.
///
/// `z_blocks[i]` holds the already-found `z` vectors of view `i` as
/// orthonormal columns (possibly zero columns for the first set). The block
/// matrix is
///
/// ```text
/// A(i,j) = P_i K~_i^-1 K_i K_j K~_j^-1 P_j / (s - 1)    for i != j,
/// A(i,i) = (1/(1 - kappa)) I ,
/// ```
///
/// with `P_i = I - Z^(i) Z^(i)T`. The result is PSD with diagonal blocks
/// that are multiples of the identity rather than the identity itself; the
/// solvers accept it unchanged because feasibility only normalizes block
/// norms.
pub fn build_deflated_matrix(dual: &DualProblem, z_blocks: &[DMatrix<f64>]) -> Result<QcqpProblem> {
    let m = dual.num_views();
    let s = dual.sample_count();
    if z_blocks.len() != m {
        return Err(Error::InvalidInput(format!(
            "expected {m} deflation blocks, got {}",
            z_blocks.len()
        )));
    }
    let k = z_blocks[0].ncols();
    for (i, z) in z_blocks.iter().enumerate() {
        if z.nrows() != s || z.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "deflation block {i} is {}x{}, expected {s}x{k}",
                z.nrows(),
                z.ncols()
            )));
        }
        let gram_err = max_abs(&(z.transpose() * z - DMatrix::identity(k, k)));
        if gram_err > ORTHONORMALITY_TOL {
            return Err(Error::InvalidInput(format!(
                "deflation block {i} is not orthonormal (deviation {gram_err:.3e})"
            )));
        }
    }

    // G_i = K_i K~_i^-1 P_i; off-diagonal blocks are G_i^T G_j / (s - 1)
    let gs: Vec<DMatrix<f64>> = (0..m)
        .map(|i| {
            let mut p = DMatrix::identity(s, s);
            if k > 0 {
                p -= &z_blocks[i] * z_blocks[i].transpose();
            }
            &dual.grams[i] * dual.solve_factor(i, &p)
        })
        .collect();

    let denom = (dual.s - 1) as f64;
    let diag = 1.0 / (1.0 - dual.kappa);
    let mut a = DMatrix::zeros(m * s, m * s);
    for i in 0..m {
        for d in 0..s {
            a[(i * s + d, i * s + d)] = diag;
        }
        for j in (i + 1)..m {
            let block = gs[i].transpose() * &gs[j] / denom;
            a.view_mut((i * s, j * s), (s, s)).copy_from(&block);
            a.view_mut((j * s, i * s), (s, s)).copy_from(&block.transpose());
        }
    }
    let structure = BlockStructure::uniform(m, s)?;
    QcqpProblem::with_scaled_diagonal(a, structure)
}

/// `k` canonical sets of dual coefficients for every view.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CanonicalSetRepr", into = "CanonicalSetRepr")]
pub struct CanonicalSet {
    /// Dual coefficients, one `s x k` matrix per view.
    y: Vec<DMatrix<f64>>,
    /// Whitened images `Z^(i) = K~_i Y^(i)`, orthonormal columns per view.
    z: Vec<DMatrix<f64>>,
    /// Per-set estimates of the regularized sum of cross-correlations.
    train_objectives: Vec<f64>,
    kappa: f64,
}

/// Serialized form of [`CanonicalSet`].
#[derive(Serialize, Deserialize)]
struct CanonicalSetRepr {
    kappa: f64,
    train_objectives: Vec<f64>,
    y: Vec<ViewData>,
    z: Vec<ViewData>,
}

impl From<CanonicalSet> for CanonicalSetRepr {
    fn from(c: CanonicalSet) -> Self {
        Self {
            kappa: c.kappa,
            train_objectives: c.train_objectives,
            y: c.y.iter().map(ViewData::from_matrix).collect(),
            z: c.z.iter().map(ViewData::from_matrix).collect(),
        }
    }
}

impl TryFrom<CanonicalSetRepr> for CanonicalSet {
    type Error = Error;

    fn try_from(repr: CanonicalSetRepr) -> Result<Self> {
        let y: Vec<DMatrix<f64>> =
            repr.y.into_iter().map(ViewData::into_matrix).collect::<Result<_>>()?;
        let z: Vec<DMatrix<f64>> =
            repr.z.into_iter().map(ViewData::into_matrix).collect::<Result<_>>()?;
        if y.len() != z.len() || y.is_empty() {
            return Err(Error::InvalidInput("canonical set has mismatched view counts".into()));
        }
        let k = y[0].ncols();
        if repr.train_objectives.len() != k
            || y.iter().zip(&z).any(|(a, b)| a.shape() != y[0].shape() || b.shape() != a.shape())
        {
            return Err(Error::InvalidInput("canonical set blocks have mismatched shapes".into()));
        }
        Ok(Self { y, z, train_objectives: repr.train_objectives, kappa: repr.kappa })
    }
}

impl CanonicalSet {
    /// Number of canonical sets.
    pub fn k(&self) -> usize {
        self.y[0].ncols()
    }

    /// Number of views.
    pub fn num_views(&self) -> usize {
        self.y.len()
    }

    /// Shrinkage weight the set was computed with.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Dual coefficients for view `i` (`s x k`).
    pub fn y(&self, i: usize) -> &DMatrix<f64> {
        &self.y[i]
    }

    /// Whitened images for view `i` (`s x k`, orthonormal columns).
    pub fn z(&self, i: usize) -> &DMatrix<f64> {
        &self.z[i]
    }

    /// Per-set train objectives: estimated regularized sums of pairwise
    /// cross-correlations, in deflation order.
    pub fn train_objectives(&self) -> &[f64] {
        &self.train_objectives
    }
}

fn in_set(set: usize) -> impl Fn(Error) -> Error {
    move |source| Error::InSet { set, source: Box::new(source) }
}

/// Computes `k` canonical sets by deflation.
///
/// For each set the deflated matrix is rebuilt with the bases found so far,
/// the local solver is run from several random starting points drawn inside
/// the feasible complement, the best solution's blocks are re-projected and
/// renormalized (cleaning up roundoff drift), and the dual coefficients are
/// recovered as `y^(i) = K~_i^-1 z^(i)`.
///
/// Requires `1 <= k <= s - 1`: each deflation step removes one direction per
/// view and centering already consumed one.
pub fn solve_k_sets(dual: &DualProblem, k: usize, opts: &HorstOptions) -> Result<CanonicalSet> {
    let m = dual.num_views();
    let s = dual.sample_count();
    if k == 0 || k > s - 1 {
        return Err(Error::InvalidInput(format!(
            "number of canonical sets must lie in [1, {}], got {k}",
            s - 1
        )));
    }
    let mut z_blocks: Vec<DMatrix<f64>> = vec![DMatrix::zeros(s, 0); m];
    let mut y_blocks: Vec<DMatrix<f64>> = vec![DMatrix::zeros(s, 0); m];
    let mut train_objectives = Vec::with_capacity(k);

    for set_idx in 0..k {
        let wrap = in_set(set_idx);
        let problem = build_deflated_matrix(dual, &z_blocks)?;
        let structure = problem.structure().clone();
        let set_seed = derive_seed(opts.seed, set_idx as u64);

        let mut best: Option<LocalSolution> = None;
        for restart in 0..KERNEL_RESTARTS {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(set_seed, restart as u64));
            // starting point inside the feasible complement of the found sets
            let mut values = DVector::zeros(m * s);
            for (i, z_prev) in z_blocks.iter().enumerate() {
                loop {
                    let mut v = gaussian_vector(&mut rng, s);
                    if set_idx > 0 {
                        v -= z_prev * (z_prev.transpose() * &v);
                    }
                    if v.norm() > ZERO_NORM_FLOOR {
                        values.rows_mut(i * s, s).copy_from(&v);
                        break;
                    }
                }
            }
            let mut x0 = BlockVector::new(values, structure.clone()).map_err(&wrap)?;
            x0.normalize_blocks().map_err(&wrap)?;
            let solution = horst::solve(&problem, &x0, opts).map_err(&wrap)?;
            if best.as_ref().is_none_or(|b| solution.objective > b.objective) {
                best = Some(solution);
            }
        }
        let best = best.expect("at least one restart ran");

        // cleanup: re-project each block onto the complement, renormalize,
        // and record the objective of the cleaned point
        let mut cleaned = best.x;
        for (i, z_prev) in z_blocks.iter().enumerate() {
            let mut v = cleaned.block(i).into_owned();
            if set_idx > 0 {
                v -= z_prev * (z_prev.transpose() * &v);
            }
            cleaned.block_mut(i).copy_from(&v);
        }
        cleaned.normalize_blocks().map_err(&wrap)?;
        let objective = problem.objective(&cleaned).map_err(&wrap)?;
        train_objectives.push((objective - m as f64 / (1.0 - dual.kappa)) / 2.0);

        for i in 0..m {
            let z_new = cleaned.block(i).into_owned();
            let y_new = dual.solve_factor(i, &DMatrix::from_column_slice(s, 1, z_new.as_slice()));
            z_blocks[i] = stack_column(&z_blocks[i], &z_new);
            y_blocks[i] = stack_column(&y_blocks[i], &y_new.column(0).into_owned());
        }
    }

    Ok(CanonicalSet { y: y_blocks, z: z_blocks, train_objectives, kappa: dual.kappa })
}

fn stack_column(m: &DMatrix<f64>, col: &DVector<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols() + 1);
    out.view_mut((0, 0), m.shape()).copy_from(m);
    out.set_column(m.ncols(), col);
    out
}

/// Evaluates a canonical set on train and test data: per-set empirical sums
/// of pairwise correlations of the projected observations.
///
/// Test observations are projected through kernel evaluations against the
/// training observations, centered at the training feature mean. Requires at
/// least three test observations for the correlations to be meaningful.
pub fn evaluate_projections(
    spec: &KernelSpec,
    train_views: &[DMatrix<f64>],
    test_views: &[DMatrix<f64>],
    set: &CanonicalSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = set.num_views();
    if train_views.len() != m || test_views.len() != m {
        return Err(Error::InvalidInput(format!(
            "canonical set has {m} views, got {} train and {} test",
            train_views.len(),
            test_views.len()
        )));
    }
    let s = set.z[0].nrows();
    let s_test = test_views[0].ncols();
    if s_test < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least three test observations, got {s_test}"
        )));
    }
    for i in 0..m {
        if train_views[i].ncols() != s {
            return Err(Error::InvalidInput(format!(
                "train view {i} has {} observations, canonical set expects {s}",
                train_views[i].ncols()
            )));
        }
        if test_views[i].ncols() != s_test {
            return Err(Error::InvalidInput(format!(
                "test view {i} has {} observations, view 0 has {s_test}",
                test_views[i].ncols()
            )));
        }
        if test_views[i].nrows() != train_views[i].nrows() {
            return Err(Error::InvalidInput(format!(
                "view {i} feature dimensions differ between train ({}) and test ({})",
                train_views[i].nrows(),
                test_views[i].nrows()
            )));
        }
    }

    // projections: per view an s x k (train) and s_test x k (test) matrix
    let mut train_proj = Vec::with_capacity(m);
    let mut test_proj = Vec::with_capacity(m);
    for i in 0..m {
        let k_raw = symmetrize(&kernel_matrix(spec, &train_views[i], &train_views[i])?);
        let r_raw = kernel_matrix(spec, &train_views[i], &test_views[i])?.transpose();
        train_proj.push(center_against_train(&k_raw, &k_raw) * &set.y[i]);
        test_proj.push(center_against_train(&r_raw, &k_raw) * &set.y[i]);
    }

    let k = set.k();
    let mut train_sumcor = Vec::with_capacity(k);
    let mut test_sumcor = Vec::with_capacity(k);
    for ell in 0..k {
        train_sumcor.push(pairwise_correlation_sum(&train_proj, ell)?);
        test_sumcor.push(pairwise_correlation_sum(&test_proj, ell)?);
    }
    Ok((train_sumcor, test_sumcor))
}

/// Sum over view pairs of the empirical correlation of column `ell` of the
/// projection matrices.
fn pairwise_correlation_sum(projections: &[DMatrix<f64>], ell: usize) -> Result<f64> {
    let centered: Vec<DVector<f64>> = projections
        .iter()
        .map(|p| {
            let col = p.column(ell).into_owned();
            let mean = col.mean();
            col.map(|v| v - mean)
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.norm()).collect();
    if let Some(i) = norms.iter().position(|&n| n * n <= f64::MIN_POSITIVE) {
        return Err(Error::DegenerateInput(format!(
            "projection of view {i} has zero empirical variance"
        )));
    }
    let mut total = 0.0;
    for i in 0..centered.len() {
        for j in (i + 1)..centered.len() {
            total += centered[i].dot(&centered[j]) / (norms[i] * norms[j]);
        }
    }
    Ok(total)
}

/// Recovers the primal canonical vector of a linear-kernel solution:
/// `w = X~ y` for the row-centered view `X~`.
pub fn primal_image(train_view: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if train_view.ncols() != y.len() {
        return Err(Error::InvalidInput(format!(
            "view has {} observations, dual vector has {}",
            train_view.ncols(),
            y.len()
        )));
    }
    Ok(center_rows(train_view) * y)
}
