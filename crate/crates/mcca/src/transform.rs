//! Whitening, covariance estimation, and the reduction from binary
//! quadratic optimization.
//!
//! Whitening rewrites a [`SumcorProblem`] as an equivalent [`QcqpProblem`]:
//! factor each diagonal covariance block as `C_ii = L_i L_i^T` (Cholesky),
//! substitute `x_i = L_i^T w_i`, and the correlation constraints become unit
//! norms while the objective becomes the quadratic form of
//! `A_ij = L_i^{-1} C_ij L_j^{-T}`. For any feasible `x`,
//!
//! ```text
//! x^T A x  =  2 * sumcor(w)  +  m,        w_i = L_i^{-T} x_i ,
//! ```
//!
//! so the two formulations share optimizers.
//!
//! The reduction in [`reduce_bqo`] embeds binary quadratic optimization
//! (maximizing `b^T Q b` over sign vectors) into this problem class with all
//! blocks one-dimensional, which is what makes the general problem hard and
//! supplies adversarial test instances.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::block::{BlockStructure, BlockVector};
use crate::error::{Error, Result};
use crate::model::{QcqpProblem, SumcorProblem};
use crate::util::{center_rows, symmetrize};

/// A whitened problem together with the Cholesky factors needed to map
/// solutions back to the original variables.
#[derive(Debug, Clone)]
pub struct Whitening {
    problem: QcqpProblem,
    /// Lower-triangular factors `L_i` with `C_ii = L_i L_i^T`.
    factors: Vec<DMatrix<f64>>,
}

impl Whitening {
    /// The whitened quadratic problem.
    pub fn problem(&self) -> &QcqpProblem {
        &self.problem
    }

    /// Consumes the whitening and returns the quadratic problem.
    pub fn into_problem(self) -> QcqpProblem {
        self.problem
    }

    /// Lower-triangular Cholesky factor of the `i`-th diagonal covariance
    /// block.
    pub fn factor(&self, i: usize) -> &DMatrix<f64> {
        &self.factors[i]
    }

    /// Maps a whitened vector back to original weights, `w_i = L_i^{-T} x_i`.
    pub fn primal_from_whitened(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.structure() != self.problem.structure() {
            return Err(Error::InvalidInput("vector has a different block structure".into()));
        }
        let mut w = BlockVector::zeros(x.structure().clone());
        for i in 0..self.factors.len() {
            let xi = x.block(i).into_owned();
            let wi = self.factors[i]
                .tr_solve_lower_triangular(&xi)
                .ok_or(Error::NotPositiveDefinite { block: i })?;
            w.block_mut(i).copy_from(&wi);
        }
        Ok(w)
    }

    /// Maps original weights to whitened coordinates, `x_i = L_i^T w_i`.
    pub fn whitened_from_primal(&self, w: &BlockVector) -> Result<BlockVector> {
        if w.structure() != self.problem.structure() {
            return Err(Error::InvalidInput("vector has a different block structure".into()));
        }
        let mut x = BlockVector::zeros(w.structure().clone());
        for i in 0..self.factors.len() {
            let xi = self.factors[i].transpose() * w.block(i);
            x.block_mut(i).copy_from(&xi);
        }
        Ok(x)
    }
}

/// Whitens a sum-of-correlations problem into its quadratic form.
///
/// Fails with [`Error::NotPositiveDefinite`] if a diagonal block cannot be
/// factored (the problem constructor already guards this, so the error is
/// only reachable for borderline-conditioned blocks).
pub fn whiten(problem: &SumcorProblem) -> Result<Whitening> {
    let structure = problem.structure().clone();
    let m = structure.num_blocks();
    let n = structure.total_dim();

    let mut factors = Vec::with_capacity(m);
    for i in 0..m {
        let block = problem.block(i, i).into_owned();
        let chol: Cholesky<f64, Dyn> =
            Cholesky::new(block).ok_or(Error::NotPositiveDefinite { block: i })?;
        factors.push(chol.unpack());
    }

    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..m {
        for j in (i + 1)..m {
            let c_ij = problem.block(i, j).into_owned();
            // M = L_i^{-1} C_ij, then  A_ij = M L_j^{-T} = (L_j^{-1} M^T)^T
            let mi = factors[i]
                .solve_lower_triangular(&c_ij)
                .ok_or(Error::NotPositiveDefinite { block: i })?;
            let tj = factors[j]
                .solve_lower_triangular(&mi.transpose())
                .ok_or(Error::NotPositiveDefinite { block: j })?;
            let a_ij = tj.transpose();
            a.view_mut((structure.offset(i), structure.offset(j)), a_ij.shape())
                .copy_from(&a_ij);
            a.view_mut((structure.offset(j), structure.offset(i)), (a_ij.ncols(), a_ij.nrows()))
                .copy_from(&a_ij.transpose());
        }
    }

    let problem = QcqpProblem::new(a, structure)?;
    Ok(Whitening { problem, factors })
}

/// Estimates a joint covariance matrix from per-view data and shrinks the
/// diagonal blocks toward the identity.
///
/// Each view is an `n_i x s` matrix whose columns are observations; all
/// views must share the same `s >= 2`. Rows are centered before estimation.
/// With shrinkage weight `kappa` in `[0, 1]`, diagonal blocks are
/// `(1 - kappa) X_i X_i^T / (s - 1) + kappa I` and off-diagonal blocks are
/// `X_i X_j^T / (s - 1)`; `kappa = 1` therefore yields exact identity
/// diagonal blocks, and any `kappa > 0` makes them positive definite.
pub fn estimate_regularized_covariance(views: &[DMatrix<f64>], kappa: f64) -> Result<SumcorProblem> {
    if views.len() < 2 {
        return Err(Error::InvalidInput("need at least two views".into()));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidInput(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    let s = views[0].ncols();
    for (i, v) in views.iter().enumerate() {
        if v.ncols() != s {
            return Err(Error::InvalidInput(format!(
                "view {i} has {} observations but view 0 has {s}",
                v.ncols()
            )));
        }
        if v.nrows() == 0 {
            return Err(Error::InvalidInput(format!("view {i} has zero rows")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("view {i} contains non-finite entries")));
        }
    }
    if s < 2 {
        return Err(Error::DegenerateInput(
            "covariance estimation needs at least two observations".into(),
        ));
    }

    let centered: Vec<DMatrix<f64>> = views.iter().map(center_rows).collect();
    let structure = BlockStructure::new(views.iter().map(|v| v.nrows()).collect())?;
    let n = structure.total_dim();
    let denom = (s - 1) as f64;

    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 0..views.len() {
        for j in i..views.len() {
            let mut block = &centered[i] * centered[j].transpose() / denom;
            if i == j {
                block *= 1.0 - kappa;
                for d in 0..block.nrows() {
                    block[(d, d)] += kappa;
                }
            }
            c.view_mut((structure.offset(i), structure.offset(j)), block.shape())
                .copy_from(&block);
            if i != j {
                c.view_mut(
                    (structure.offset(j), structure.offset(i)),
                    (block.ncols(), block.nrows()),
                )
                .copy_from(&block.transpose());
            }
        }
    }

    SumcorProblem::new(c, structure)
}

/// Reduces a binary quadratic optimization instance to a whitened
/// sum-of-correlations problem with one-dimensional blocks.
///
/// For `Q` of size `m x m` (any square matrix, `m >= 2`), the construction
/// symmetrizes `Q`, shifts the diagonal by `c = ||Q||_1 + 1` (maximum
/// absolute column sum) to force strict diagonal dominance, lifts every
/// diagonal entry to the common value `g = max_i (Q + cI)_ii`, and rescales
/// by `1/g`. Over sign vectors `b` the objective of the result is an
/// increasing affine function of `b^T Q b`, so the maximizers coincide; the
/// result is positive definite with unit diagonal, i.e. a valid whitened
/// problem.
pub fn reduce_bqo(raw: &DMatrix<f64>) -> Result<QcqpProblem> {
    let m = raw.nrows();
    if raw.ncols() != m {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            raw.nrows(),
            raw.ncols()
        )));
    }
    if m < 2 {
        return Err(Error::InvalidInput("need at least a 2x2 matrix".into()));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix contains non-finite entries".into()));
    }

    let mut a = symmetrize(raw);
    let norm1 = (0..m)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let c = norm1 + 1.0;
    for i in 0..m {
        a[(i, i)] += c;
    }
    let g = (0..m).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = if i == j { 1.0 } else { a[(i, j)] / g };
        }
    }

    QcqpProblem::new(a, BlockStructure::uniform(m, 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::util::{gaussian_matrix, gaussian_vector};

    #[test]
    fn whiten_unit_variances_is_identity_map() {
        let s = BlockStructure::new(vec![1, 1]).unwrap();
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let w = whiten(&SumcorProblem::new(c, s).unwrap()).unwrap();
        assert_relative_eq!(w.problem().matrix()[(0, 1)], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn whiten_scalar_blocks_recovers_correlation() {
        // var_1 = 4, var_2 = 9, cov = 3  =>  correlation 0.5
        let s = BlockStructure::new(vec![1, 1]).unwrap();
        let c = DMatrix::from_row_slice(2, 2, &[4.0, 3.0, 3.0, 9.0]);
        let w = whiten(&SumcorProblem::new(c, s).unwrap()).unwrap();
        assert_relative_eq!(w.problem().matrix()[(0, 1)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn whiten_matches_hand_cholesky() {
        // C_00 = [[4,2],[2,5]] has L = [[2,0],[1,2]]; with C_01 = (3, 0) and
        // a third coordinate of variance 9 the whitened cross block is
        // L^{-1} (3,0) / 3 = (0.5, -0.25).
        let s = BlockStructure::new(vec![2, 1]).unwrap();
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 3.0, 2.0, 5.0, 0.0, 3.0, 0.0, 9.0]);
        let w = whiten(&SumcorProblem::new(c, s).unwrap()).unwrap();
        assert_relative_eq!(w.factor(0)[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(w.factor(0)[(1, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(w.factor(0)[(1, 1)], 2.0, epsilon = 1e-14);
        let a = w.problem().matrix();
        assert_relative_eq!(a[(0, 2)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(a[(1, 2)], -0.25, epsilon = 1e-14);
    }

    /// Random symmetric positive definite matrix with the given block sizes.
    fn random_spd(rng: &mut ChaCha8Rng, sizes: &[usize]) -> SumcorProblem {
        let structure = BlockStructure::new(sizes.to_vec()).unwrap();
        let n = structure.total_dim();
        let g = gaussian_matrix(rng, n, n + 2);
        let mut c = &g * g.transpose() / (n as f64 + 2.0);
        for d in 0..n {
            c[(d, d)] += 0.5;
        }
        SumcorProblem::new(c, structure).unwrap()
    }

    #[test]
    fn objective_relation_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for sizes in [vec![1, 1, 1], vec![2, 3], vec![3, 1, 2], vec![2, 2, 2, 2]] {
            for _ in 0..5 {
                let p = random_spd(&mut rng, &sizes);
                let w = whiten(&p).unwrap();
                let m = p.num_blocks() as f64;
                let mut x = BlockVector::new(
                    gaussian_vector(&mut rng, p.total_dim()),
                    p.structure().clone(),
                )
                .unwrap();
                x.normalize_blocks().unwrap();
                let weights = w.primal_from_whitened(&x).unwrap();
                let qcqp = w.problem().objective(&x).unwrap();
                let sumcor = p.sum_correlations(&weights).unwrap();
                assert_relative_eq!(qcqp, 2.0 * sumcor + m, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn whitened_round_trip_restores_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_spd(&mut rng, &[3, 2, 4]);
        let w = whiten(&p).unwrap();
        let x =
            BlockVector::new(gaussian_vector(&mut rng, p.total_dim()), p.structure().clone())
                .unwrap();
        let back = w.whitened_from_primal(&w.primal_from_whitened(&x).unwrap()).unwrap();
        for (a, b) in x.values().iter().zip(back.values().iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn covariance_estimate_centers_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = gaussian_matrix(&mut rng, 2, 30);
        let x1 = gaussian_matrix(&mut rng, 3, 30);
        let p0 = estimate_regularized_covariance(&[x0.clone(), x1.clone()], 0.3).unwrap();
        // shifting a row by a constant must not change the estimate
        let mut shifted = x0;
        for c in 0..shifted.ncols() {
            shifted[(0, c)] += 100.0;
        }
        let p1 = estimate_regularized_covariance(&[shifted, x1], 0.3).unwrap();
        assert_relative_eq!(
            (p0.covariance() - p1.covariance()).norm(),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn covariance_estimate_kappa_one_gives_identity_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let views = [gaussian_matrix(&mut rng, 2, 10), gaussian_matrix(&mut rng, 2, 10)];
        let p = estimate_regularized_covariance(&views, 1.0).unwrap();
        let diag = p.block(0, 0).into_owned();
        assert_relative_eq!((diag - DMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_estimate_matches_hand_computation() {
        // one observation pair: X0 = [1, -1], X1 = [2, 0] (1 x 2 each)
        // centered: [1, -1], [1, -1]; s - 1 = 1
        // C_00 = 2, C_11 = 2, C_01 = 2; with kappa = 0.5: diag = 2*0.5 + 0.5
        let x0 = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let x1 = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let p = estimate_regularized_covariance(&[x0, x1], 0.5).unwrap();
        assert_relative_eq!(p.covariance()[(0, 0)], 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.covariance()[(1, 1)], 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.covariance()[(0, 1)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn covariance_estimate_validates_input() {
        let ok = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let short = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(estimate_regularized_covariance(&[ok.clone(), short], 0.5).is_err());
        assert!(estimate_regularized_covariance(&[ok.clone(), ok.clone()], 1.5).is_err());
        let single = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(
            estimate_regularized_covariance(&[single.clone(), single], 0.5),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn reduce_bqo_matches_hand_trace() {
        // Q = [[0,1],[1,0]]: ||Q||_1 = 1, c = 2, Q + cI = [[2,1],[1,2]],
        // g = 2, D = 0, result = [[1, .5], [.5, 1]].
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = reduce_bqo(&q).unwrap();
        assert_eq!(p.num_blocks(), 2);
        assert_relative_eq!(p.matrix()[(0, 0)], 1.0);
        assert_relative_eq!(p.matrix()[(0, 1)], 0.5);
    }

    /// Enumerates sign vectors and returns those maximizing `b^T Q b`.
    fn sign_argmax(q: &DMatrix<f64>) -> Vec<Vec<f64>> {
        let m = q.nrows();
        let mut best = f64::NEG_INFINITY;
        let mut arg = Vec::new();
        for bits in 0..(1u32 << m) {
            let b: Vec<f64> =
                (0..m).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let bv = DVector::from_vec(b.clone());
            let val = (q * &bv).dot(&bv);
            if val > best + 1e-12 {
                best = val;
                arg = vec![b];
            } else if (val - best).abs() <= 1e-12 {
                arg.push(b);
            }
        }
        arg
    }

    #[test]
    fn reduce_bqo_preserves_sign_maximizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [3usize, 4, 5] {
            for _ in 0..4 {
                let q = gaussian_matrix(&mut rng, m, m);
                let reduced = reduce_bqo(&q).unwrap();
                let orig = sign_argmax(&symmetrize(&q));
                let red = sign_argmax(reduced.matrix());
                assert_eq!(orig, red, "maximizer sets diverged for m = {m}");
            }
        }
    }

    #[test]
    fn reduce_bqo_rejects_bad_shapes() {
        assert!(reduce_bqo(&DMatrix::from_row_slice(1, 2, &[0.0, 1.0])).is_err());
        assert!(reduce_bqo(&DMatrix::from_row_slice(1, 1, &[1.0])).is_err());
    }
}
