//! Block partitions of vectors and matrices.
//!
//! Every multi-set problem in this crate partitions an `N`-dimensional space
//! into `m` contiguous blocks of sizes `n_1, ..., n_m`. [`BlockStructure`]
//! records that partition; [`BlockVector`] couples a dense vector with it and
//! offers per-block views and normalization.

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView, DVectorViewMut};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{FEASIBILITY_TOL, ZERO_NORM_FLOOR};

/// Sizes and offsets of a contiguous block partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockStructure {
    /// Builds a partition from per-block sizes. Every size must be at least
    /// one and at least one block must be present.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidInput("block structure must have at least one block".into()));
        }
        if let Some(i) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidInput(format!("block {i} has size zero")));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0usize;
        for &n in &sizes {
            offsets.push(total);
            total += n;
        }
        Ok(Self { sizes, offsets, total })
    }

    /// Partition with `m` blocks of equal size `n`.
    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("block structure must have at least one block".into()));
        }
        Self::new(vec![n; m])
    }

    /// Number of blocks `m`.
    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Size of block `i`.
    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// Offset of block `i` within the stacked vector.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Total dimension `N = n_1 + ... + n_m`.
    pub fn total_dim(&self) -> usize {
        self.total
    }

    /// All block sizes in order.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// View of the `(i, j)` block of a square `N x N` matrix.
    pub fn matrix_block<'a>(&self, m: &'a DMatrix<f64>, i: usize, j: usize) -> DMatrixView<'a, f64> {
        m.view((self.offset(i), self.offset(j)), (self.size(i), self.size(j)))
    }
}

impl TryFrom<Vec<usize>> for BlockStructure {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<BlockStructure> for Vec<usize> {
    fn from(s: BlockStructure) -> Self {
        s.sizes
    }
}

/// A dense vector together with the block partition it lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockVectorRepr", into = "BlockVectorRepr")]
pub struct BlockVector {
    values: DVector<f64>,
    structure: BlockStructure,
}

#[derive(Serialize, Deserialize)]
struct BlockVectorRepr {
    blocks: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<BlockVectorRepr> for BlockVector {
    type Error = Error;

    fn try_from(repr: BlockVectorRepr) -> Result<Self> {
        let structure = BlockStructure::new(repr.blocks)?;
        Self::new(DVector::from_vec(repr.values), structure)
    }
}

impl From<BlockVector> for BlockVectorRepr {
    fn from(v: BlockVector) -> Self {
        BlockVectorRepr {
            blocks: v.structure.sizes.clone(),
            values: v.values.iter().copied().collect(),
        }
    }
}

impl BlockVector {
    /// Couples a vector with a block structure of matching total dimension.
    pub fn new(values: DVector<f64>, structure: BlockStructure) -> Result<Self> {
        if values.len() != structure.total_dim() {
            return Err(Error::InvalidInput(format!(
                "vector length {} does not match block structure dimension {}",
                values.len(),
                structure.total_dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("vector contains non-finite entries".into()));
        }
        Ok(Self { values, structure })
    }

    /// All-zero vector on the given structure.
    pub fn zeros(structure: BlockStructure) -> Self {
        let values = DVector::zeros(structure.total_dim());
        Self { values, structure }
    }

    /// The underlying stacked vector.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// The block partition.
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// View of block `i`.
    pub fn block(&self, i: usize) -> DVectorView<'_, f64> {
        self.values.rows(self.structure.offset(i), self.structure.size(i))
    }

    /// Mutable view of block `i`.
    pub fn block_mut(&mut self, i: usize) -> DVectorViewMut<'_, f64> {
        self.values.rows_mut(self.structure.offset(i), self.structure.size(i))
    }

    /// Euclidean norm of block `i`.
    pub fn block_norm(&self, i: usize) -> f64 {
        self.block(i).norm()
    }

    /// Rescales every block to unit Euclidean norm in place. Fails with
    /// [`Error::ZeroBlock`] if a block norm underflows to numerical zero.
    pub fn normalize_blocks(&mut self) -> Result<()> {
        for i in 0..self.structure.num_blocks() {
            let norm = self.block_norm(i);
            if !norm.is_finite() || norm < ZERO_NORM_FLOOR {
                return Err(Error::ZeroBlock { block: i, iteration: None });
            }
            self.block_mut(i).unscale_mut(norm);
        }
        Ok(())
    }

    /// Checks `| ||x_i||^2 - 1 | <= tol` for every block.
    pub fn is_feasible(&self, tol: f64) -> bool {
        (0..self.structure.num_blocks()).all(|i| {
            let sq = self.block(i).norm_squared();
            (sq - 1.0).abs() <= tol
        })
    }

    /// [`BlockVector::is_feasible`] at the default tolerance.
    pub fn is_feasible_default(&self) -> bool {
        self.is_feasible(FEASIBILITY_TOL)
    }
}
