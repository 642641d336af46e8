//! Random instance generation: three correlation-matrix samplers and the
//! random-projection basis construction.
//!
//! The samplers produce correlation matrices (unit diagonal, PSD) with
//! qualitatively different spectra:
//!
//! * [`random_gram`] — inner products of normalized Gaussian vectors. In
//!   high dimension such vectors are nearly orthogonal, so individual
//!   correlations are weak and the spectrum follows a fixed bulk law.
//! * [`random_spectrum`] — a uniformly sampled spectrum (summing to `N`)
//!   realized exactly by Givens-rotation corrections, so any spectral
//!   shape can occur.
//! * [`random_onedim`] — an approximately rank-one coupling: every view
//!   correlates with the others through a single coordinate, plus `epsilon`
//!   noise.
//!
//! [`random_projection_basis`] builds the cross-view random projection
//! bases used by the restricted-space protocol: random directions in each
//! view, ridge-regressed into every other view.
//!
//! Everything is deterministic per `(parameters, seed)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block::BlockStructure;
use crate::error::{Error, Result};
use crate::io::ViewData;
use crate::tolerances::{ONEDIM_EPSILON, ZERO_NORM_FLOOR};
use crate::util::gaussian_matrix;

/// Which correlation-matrix sampler to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Normalized-Gaussian inner products.
    Gram,
    /// Uniform spectrum on the simplex, realized exactly.
    Spectrum,
    /// Noisy single-coordinate coupling across views.
    OneDim,
}

/// A reproducible description of one random instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Sampler.
    pub kind: GeneratorKind,
    /// Block structure of the instance; the samplers themselves only need
    /// its total dimension except for `OneDim`, which couples the blocks.
    pub blocks: BlockStructure,
    /// Noise level for `OneDim`; must lie in `(0, 1)`. Ignored otherwise.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// RNG seed.
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    ONEDIM_EPSILON
}

impl GeneratorSpec {
    /// A spec with the default noise level.
    pub fn new(kind: GeneratorKind, blocks: BlockStructure, seed: u64) -> Self {
        Self { kind, blocks, epsilon: ONEDIM_EPSILON, seed }
    }

    /// Draws the correlation matrix this spec describes.
    pub fn generate(&self) -> Result<DMatrix<f64>> {
        match self.kind {
            GeneratorKind::Gram => random_gram(self.blocks.total_dim(), self.seed),
            GeneratorKind::Spectrum => random_spectrum(self.blocks.total_dim(), self.seed),
            GeneratorKind::OneDim => {
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "noise level must lie in (0, 1), got {}",
                        self.epsilon
                    )));
                }
                random_onedim(&self.blocks, self.epsilon, self.seed)
            }
        }
    }
}

/// Gram matrix of `n` normalized standard-Gaussian vectors: a random
/// correlation matrix with exact unit diagonal.
pub fn random_gram(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gram_with_rng(n, &mut rng))
}

fn gram_with_rng(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(n, n);
    for j in 0..n {
        loop {
            let col = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = col.norm();
            // zero-probability event; resample keeps the output total
            if norm > ZERO_NORM_FLOOR {
                v.set_column(j, &(col / norm));
                break;
            }
        }
    }
    let mut c = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot = v.column(i).dot(&v.column(j));
            c[(i, j)] = dot;
            c[(j, i)] = dot;
        }
    }
    c
}

/// A random correlation matrix whose eigenvalues are drawn uniformly from
/// the simplex `{lambda >= 0, sum lambda_i = n}`.
pub fn random_spectrum(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // normalized exponential variates are uniform on the simplex
    let mut lambda: Vec<f64>;
    loop {
        lambda = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = lambda.iter().sum();
        if total > ZERO_NORM_FLOOR {
            for l in &mut lambda {
                *l *= n as f64 / total;
            }
            break;
        }
    }
    correlation_with_spectrum(&lambda, &mut rng)
}

/// A random correlation matrix with the prescribed eigenvalues, which must
/// be nonnegative and sum to the dimension.
///
/// The matrix starts as `Q diag(spectrum) Q^T` for a random orthogonal `Q`
/// and is corrected by Givens rotations that set one diagonal entry to 1 at
/// a time while preserving the spectrum exactly.
pub fn correlation_with_spectrum(spectrum: &[f64], rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let n = spectrum.len();
    if n == 0 {
        return Err(Error::InvalidInput("spectrum must be non-empty".into()));
    }
    if spectrum.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidInput("spectrum must be finite and nonnegative".into()));
    }
    let total: f64 = spectrum.iter().sum();
    if (total - n as f64).abs() > 1e-8 * n as f64 {
        return Err(Error::InvalidInput(format!(
            "spectrum sums to {total}, expected the dimension {n}"
        )));
    }

    // random orthogonal basis from the QR of a Gaussian matrix, with the
    // usual sign correction so the distribution does not depend on the QR
    // convention
    let qr = gaussian_matrix(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut a = &q * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * q.transpose();

    // Givens corrections: while some diagonal entry is below 1 another is
    // above (the trace is n), and a rotation in their plane can set the low
    // one to exactly 1 without touching the spectrum
    const DIAG_TOL: f64 = 1e-9;
    for _ in 0..n {
        let lo = (0..n).find(|&i| a[(i, i)] < 1.0 - DIAG_TOL);
        let hi = (0..n).find(|&j| a[(j, j)] > 1.0 + DIAG_TOL);
        let (i, j) = match (lo, hi) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        // choose t with c^2 a_ii + 2cs a_ij + s^2 a_jj = 1 for c = cos, s =
        // sin = t c; the smaller root in magnitude is the stable one
        let (qq, b, cc) = (a[(j, j)] - 1.0, 2.0 * a[(i, j)], a[(i, i)] - 1.0);
        let disc = (b * b - 4.0 * qq * cc).sqrt();
        let t = if b >= 0.0 {
            let s = -(b + disc) / 2.0;
            let (t1, t2) = (s / qq, cc / s);
            if t1.abs() < t2.abs() { t1 } else { t2 }
        } else {
            let s = -(b - disc) / 2.0;
            let (t1, t2) = (s / qq, cc / s);
            if t1.abs() < t2.abs() { t1 } else { t2 }
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        // A <- R^T A R for the rotation R in the (i, j) plane
        let (col_i, col_j) = (a.column(i).into_owned(), a.column(j).into_owned());
        a.set_column(i, &(c * &col_i + s * &col_j));
        a.set_column(j, &(-s * col_i + c * col_j));
        let (row_i, row_j) = (a.row(i).into_owned(), a.row(j).into_owned());
        a.set_row(i, &(c * &row_i + s * &row_j));
        a.set_row(j, &(-s * row_i + c * row_j));
        a[(i, i)] = 1.0;
    }

    // exact unit diagonal and symmetry; rotations leave only roundoff here
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)]) / 2.0;
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    Ok(a)
}

/// A correlation matrix with approximately single-dimensional cross-view
/// structure.
///
/// A random `m x m` Gram matrix `B` couples the leading coordinate of each
/// block; all other coordinates start uncorrelated. The result is blended
/// with a random full Gram matrix `D`: `C = (1 - epsilon) C0 + epsilon D`.
/// `epsilon` must lie in `[0, 1)`; zero is allowed here to expose the exact
/// embedded structure, though specs for experiment runs require it strictly
/// positive so that the diagonal blocks stay positive definite.
pub fn random_onedim(blocks: &BlockStructure, epsilon: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!(
            "noise level must lie in [0, 1), got {epsilon}"
        )));
    }
    let m = blocks.num_blocks();
    let n = blocks.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = gram_with_rng(m, &mut rng);
    let d = gram_with_rng(n, &mut rng);

    let mut c0 = DMatrix::identity(n, n);
    for bi in 0..m {
        for bj in 0..m {
            c0[(blocks.offset(bi), blocks.offset(bj))] = b[(bi, bj)];
        }
    }
    let mut c = (1.0 - epsilon) * c0 + epsilon * d;
    for i in 0..n {
        c[(i, i)] = 1.0;
    }
    Ok(c)
}

/// Cross-view random projection bases.
///
/// `block(i, j)` is the image of view `i`'s random directions in view `j`'s
/// coordinate space (an `n_j x k` matrix); `full_basis(j)` stacks the images
/// of every view's directions side by side into the `n_j x (m k)` reduction
/// basis for view `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProjectionBasesRepr", into = "ProjectionBasesRepr")]
pub struct ProjectionBases {
    /// `bases[i][j]` = P(i, j), an `n_j x k` matrix.
    bases: Vec<Vec<DMatrix<f64>>>,
    gamma: f64,
    k: usize,
}

/// Serialized form of [`ProjectionBases`].
#[derive(Serialize, Deserialize)]
struct ProjectionBasesRepr {
    gamma: f64,
    k: usize,
    bases: Vec<Vec<ViewData>>,
}

impl From<ProjectionBases> for ProjectionBasesRepr {
    fn from(p: ProjectionBases) -> Self {
        let bases = p
            .bases
            .into_iter()
            .map(|row| row.into_iter().map(|b| ViewData::from_matrix(&b)).collect())
            .collect();
        Self { gamma: p.gamma, k: p.k, bases }
    }
}

impl TryFrom<ProjectionBasesRepr> for ProjectionBases {
    type Error = Error;

    fn try_from(repr: ProjectionBasesRepr) -> Result<Self> {
        let m = repr.bases.len();
        if m == 0 || repr.bases.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidInput("basis table must be square".into()));
        }
        let mut bases = Vec::with_capacity(m);
        for row in repr.bases {
            let row: Vec<DMatrix<f64>> =
                row.into_iter().map(ViewData::into_matrix).collect::<Result<_>>()?;
            if row.iter().any(|b| b.ncols() != repr.k) {
                return Err(Error::InvalidInput("basis block has wrong column count".into()));
            }
            bases.push(row);
        }
        for j in 0..m {
            if bases.iter().any(|row| row[j].nrows() != bases[0][j].nrows()) {
                return Err(Error::InvalidInput("basis blocks disagree on view dimension".into()));
            }
        }
        Ok(Self { bases, gamma: repr.gamma, k: repr.k })
    }
}

impl ProjectionBases {
    /// Number of views.
    pub fn num_views(&self) -> usize {
        self.bases.len()
    }

    /// Directions per view.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Ridge parameter the bases were built with.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The `n_j x k` image of view `i`'s directions in view `j`'s space.
    pub fn block(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.bases[i][j]
    }

    /// The full `n_j x (m k)` reduction basis for view `j`.
    pub fn full_basis(&self, j: usize) -> DMatrix<f64> {
        let m = self.num_views();
        let nj = self.bases[0][j].nrows();
        let mut basis = DMatrix::zeros(nj, m * self.k);
        for i in 0..m {
            basis.view_mut((0, i * self.k), (nj, self.k)).copy_from(&self.bases[i][j]);
        }
        basis
    }

    /// Reduces each view to its `(m k)`-dimensional coordinates in the full
    /// basis: view `j` becomes `full_basis(j)^T X^(j)`.
    pub fn reduce_views(&self, views: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        if views.len() != self.num_views() {
            return Err(Error::InvalidInput(format!(
                "expected {} views, got {}",
                self.num_views(),
                views.len()
            )));
        }
        views
            .iter()
            .enumerate()
            .map(|(j, x)| {
                if x.nrows() != self.bases[0][j].nrows() {
                    return Err(Error::InvalidInput(format!(
                        "view {j} has {} rows, basis expects {}",
                        x.nrows(),
                        self.bases[0][j].nrows()
                    )));
                }
                Ok(self.full_basis(j).transpose() * x)
            })
            .collect()
    }
}

/// Builds random projection bases across views.
///
/// Each view `i` (an `n_i x s` matrix of `s` joint samples) receives `k`
/// Gaussian directions, rescaled so every column of `P(i, i)` has norm
/// `sqrt(n_i / k)`. The images in other views are ridge regressions of those
/// directions onto the co-occurring data:
///
/// ```text
/// P(i, j) = ((1 - gamma) X(j) X(j)^T + gamma I)^-1 X(j) X(i)^T P(i, i) .
/// ```
///
/// `gamma` in `(0, 1]` interpolates from data-driven alignment toward plain
/// cross-covariance images.
pub fn random_projection_basis(
    views: &[DMatrix<f64>],
    gamma: f64,
    k: usize,
    seed: u64,
) -> Result<ProjectionBases> {
    let m = views.len();
    if m < 2 {
        return Err(Error::InvalidInput("need at least two views".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidInput(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("need at least one direction per view".into()));
    }
    let s = views[0].ncols();
    for (i, x) in views.iter().enumerate() {
        if x.ncols() != s || x.nrows() == 0 || s == 0 {
            return Err(Error::InvalidInput(format!(
                "view {i} is {}x{}; views must be non-empty with a shared sample count",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("view {i} contains non-finite values")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // random directions in each view's own space, columns of norm sqrt(n/k)
    let mut own: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    for x in views {
        let n = x.nrows();
        let target = (n as f64 / k as f64).sqrt();
        let mut p = DMatrix::zeros(n, k);
        for c in 0..k {
            loop {
                let col = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = col.norm();
                if norm > ZERO_NORM_FLOOR {
                    p.set_column(c, &(col * (target / norm)));
                    break;
                }
            }
        }
        own.push(p);
    }

    // per-target ridge factor ((1 - gamma) X X^T + gamma I), SPD for gamma > 0
    let mut ridge = Vec::with_capacity(m);
    for x in views {
        let n = x.nrows();
        let mut g = x * x.transpose();
        g *= 1.0 - gamma;
        for d in 0..n {
            g[(d, d)] += gamma;
        }
        let chol = g.cholesky().ok_or_else(|| {
            Error::DegenerateInput("regularized view covariance is not positive definite".into())
        })?;
        ridge.push(chol);
    }

    let mut bases = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            if i == j {
                row.push(own[i].clone());
            } else {
                let target = &views[j] * (views[i].transpose() * &own[i]);
                row.push(ridge[j].solve(&target));
            }
        }
        bases.push(row);
    }
    Ok(ProjectionBases { bases, gamma, k })
}
