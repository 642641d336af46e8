//! Problem types: sum-of-correlations maximization and its whitened
//! quadratic form.
//!
//! A [`SumcorProblem`] holds a joint covariance (or correlation) matrix on a
//! block partition; the goal is to choose one weight vector per block so that
//! the pairwise correlations of the projected variables sum to a maximum.
//! Whitening (see [`crate::transform`]) turns it into a [`QcqpProblem`]:
//! maximize `x^T A x` over block vectors with unit-norm blocks, where `A` is
//! positive semidefinite with identity diagonal blocks.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DMatrixView};

use crate::block::{BlockStructure, BlockVector};
use crate::error::{Error, Result};
use crate::tolerances::{ASYMMETRY_TOL, IDENTITY_DIAG_TOL, PSD_EIG_TOL};
use crate::util::{max_abs, rel_asymmetry, symmetrize};

fn check_square_finite(m: &DMatrix<f64>, structure: &BlockStructure) -> Result<()> {
    if structure.num_blocks() < 2 {
        return Err(Error::InvalidInput(
            "sum-of-correlations problems need at least two blocks".into(),
        ));
    }
    let n = structure.total_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{} but the block structure has total dimension {}",
            m.nrows(),
            m.ncols(),
            n
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix contains non-finite entries".into()));
    }
    Ok(())
}

fn check_symmetry(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rel = rel_asymmetry(m);
    if rel > ASYMMETRY_TOL {
        return Err(Error::Asymmetric { relative: rel, tolerance: ASYMMETRY_TOL });
    }
    Ok(symmetrize(m))
}

/// Sum-of-correlations maximization problem on raw (unwhitened) covariances.
///
/// Stores the joint matrix `C` whose `(i, j)` block is the covariance
/// between views `i` and `j`. Diagonal blocks must be positive definite;
/// the matrix must be symmetric within the default relative tolerance and is
/// symmetrized on construction.
#[derive(Debug, Clone)]
pub struct SumcorProblem {
    c: DMatrix<f64>,
    structure: BlockStructure,
}

impl SumcorProblem {
    /// Validates and stores a joint covariance matrix.
    pub fn new(c: DMatrix<f64>, structure: BlockStructure) -> Result<Self> {
        check_square_finite(&c, &structure)?;
        let c = check_symmetry(&c)?;
        for i in 0..structure.num_blocks() {
            let block = structure.matrix_block(&c, i, i).into_owned();
            if Cholesky::new(block).is_none() {
                return Err(Error::NotPositiveDefinite { block: i });
            }
        }
        Ok(Self { c, structure })
    }

    /// The joint covariance matrix.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// The block partition.
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// Number of views `m`.
    pub fn num_blocks(&self) -> usize {
        self.structure.num_blocks()
    }

    /// Total dimension `N`.
    pub fn total_dim(&self) -> usize {
        self.structure.total_dim()
    }

    /// View of the covariance block between views `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        self.structure.matrix_block(&self.c, i, j)
    }

    /// Sum of pairwise correlations `sum_{i<j} rho_ij(w)` of the projections
    /// `w_i^T X_i`.
    ///
    /// Each `rho_ij = w_i^T C_ij w_j / sqrt(w_i^T C_ii w_i * w_j^T C_jj w_j)`
    /// is scale invariant per block. Fails with [`Error::DegenerateInput`]
    /// when some block projection has zero variance.
    pub fn sum_correlations(&self, w: &BlockVector) -> Result<f64> {
        if w.structure() != &self.structure {
            return Err(Error::InvalidInput("weight vector has a different block structure".into()));
        }
        let m = self.num_blocks();
        let mut stddev = Vec::with_capacity(m);
        for i in 0..m {
            let wi = w.block(i);
            let var = (self.block(i, i) * wi).dot(&wi);
            if !(var > f64::MIN_POSITIVE) {
                return Err(Error::DegenerateInput(format!(
                    "projection of block {i} has zero variance"
                )));
            }
            stddev.push(var.sqrt());
        }
        let mut total = 0.0;
        for i in 0..m {
            let wi = w.block(i);
            for j in (i + 1)..m {
                let cov = (self.block(i, j) * w.block(j)).dot(&wi);
                total += cov / (stddev[i] * stddev[j]);
            }
        }
        Ok(total)
    }
}

/// Whitened quadratic problem: maximize `x^T A x` subject to unit-norm
/// blocks.
///
/// `A` is symmetric positive semidefinite. For problems produced by
/// whitening, the diagonal blocks equal the identity; the kernelized
/// formulation produces diagonal blocks that are a common positive multiple
/// `c I` instead (see [`QcqpProblem::with_scaled_diagonal`]).
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    a: DMatrix<f64>,
    structure: BlockStructure,
    diagonal_scale: f64,
    spectral_norm: OnceLock<f64>,
}

impl QcqpProblem {
    /// Validates a whitened matrix: symmetric, identity diagonal blocks,
    /// positive semidefinite.
    ///
    /// The semidefiniteness check performs a full eigendecomposition, which
    /// also seeds the cached spectral norm.
    pub fn new(a: DMatrix<f64>, structure: BlockStructure) -> Result<Self> {
        check_square_finite(&a, &structure)?;
        let a = check_symmetry(&a)?;
        for i in 0..structure.num_blocks() {
            let block = structure.matrix_block(&a, i, i);
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    let expected = if r == c { 1.0 } else { 0.0 };
                    if (block[(r, c)] - expected).abs() > IDENTITY_DIAG_TOL {
                        return Err(Error::InvalidInput(format!(
                            "diagonal block {i} differs from the identity at ({r}, {c})"
                        )));
                    }
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let lambda_min = eig.eigenvalues.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
        if lambda_min < -PSD_EIG_TOL * lambda_max.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semidefinite: min eigenvalue {lambda_min:.3e}"
            )));
        }
        let spectral_norm = OnceLock::new();
        let _ = spectral_norm.set(lambda_max);
        Ok(Self { a, structure, diagonal_scale: 1.0, spectral_norm })
    }

    /// Variant whose diagonal blocks are a common positive multiple `c I` of
    /// the identity, as produced by the kernelized formulation.
    ///
    /// Positive semidefiniteness is not verified here: the deflated kernel
    /// construction guarantees it, and an eigendecomposition of the (large)
    /// dual matrix at every construction would dominate runtime.
    pub fn with_scaled_diagonal(a: DMatrix<f64>, structure: BlockStructure) -> Result<Self> {
        check_square_finite(&a, &structure)?;
        let a = check_symmetry(&a)?;
        let scale = a[(0, 0)];
        if !(scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "diagonal scale must be positive, got {scale:.3e}"
            )));
        }
        let tol = IDENTITY_DIAG_TOL * scale.max(1.0);
        for i in 0..structure.num_blocks() {
            let block = structure.matrix_block(&a, i, i);
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    let expected = if r == c { scale } else { 0.0 };
                    if (block[(r, c)] - expected).abs() > tol {
                        return Err(Error::InvalidInput(format!(
                            "diagonal block {i} is not a common multiple of the identity at ({r}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(Self { a, structure, diagonal_scale: scale, spectral_norm: OnceLock::new() })
    }

    /// The quadratic form matrix `A`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The block partition.
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// Number of blocks `m`.
    pub fn num_blocks(&self) -> usize {
        self.structure.num_blocks()
    }

    /// Total dimension `N`.
    pub fn total_dim(&self) -> usize {
        self.structure.total_dim()
    }

    /// The common multiple `c` of the identity on the diagonal blocks
    /// (`1.0` for whitened problems).
    pub fn diagonal_scale(&self) -> f64 {
        self.diagonal_scale
    }

    /// View of the `(i, j)` block of `A`.
    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        self.structure.matrix_block(&self.a, i, j)
    }

    /// Objective value `x^T A x`.
    pub fn objective(&self, x: &BlockVector) -> Result<f64> {
        if x.structure() != &self.structure {
            return Err(Error::InvalidInput("vector has a different block structure".into()));
        }
        Ok((&self.a * x.values()).dot(x.values()))
    }

    /// Spectral norm `||A||_2`, computed once and cached.
    pub fn spectral_norm(&self) -> f64 {
        *self.spectral_norm.get_or_init(|| {
            let eig = nalgebra::SymmetricEigen::new(self.a.clone());
            eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v))
        })
    }

    /// Largest absolute entry of `A` (used for scale-aware tolerances).
    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.a)
    }
}
