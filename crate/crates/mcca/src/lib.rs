//! Multi-set canonical correlation analysis.
//!
//! This crate finds linear (or kernelized) projections of `m` views of the
//! same observations such that the sum of all pairwise correlations of the
//! projected variables is maximized. The problem is non-convex; the crate
//! pairs a fast local solver with a semidefinite relaxation that yields
//! global certificates:
//!
//! - [`model`] — problem types on raw covariances and in whitened quadratic
//!   form.
//! - [`transform`] — whitening, regularized covariance estimation, and the
//!   reduction from binary quadratic optimization used to build hard
//!   instances.
//! - [`horst`] — the block power method (a generalization of the power
//!   iteration), with traces and multi-restart search.
//! - [`sdp`] — first-order solver for the semidefinite relaxation.
//! - [`certificates`] — global bounds, candidate extraction, and certificate
//!   reports.
//! - [`kernel`] — kernelized multi-vector extension with deflation.
//! - [`generators`] — random instance samplers and random projection bases.
//! - [`harness`] — batch experiments over random instances and the
//!   restricted-space evaluation protocol.
//! - [`io`] — file formats used by the command-line interface.
//!
//! The user guide in `book/` (an mdBook) walks through the same material
//! chapter by chapter; its code snippets are compiled and run as doc-tests
//! of the companion `guide` crate.

// parameter checks are written `!(x > 0.0)` instead of `x <= 0.0` so that
// NaN fails validation; the lint's suggested rewrite would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod certificates;
pub mod error;
pub mod generators;
pub mod harness;
pub mod horst;
pub mod io;
pub mod kernel;
pub mod model;
pub mod sdp;
pub mod tolerances;
pub mod transform;

mod util;

pub use block::{BlockStructure, BlockVector};
pub use error::{Error, Result};
pub use model::{QcqpProblem, SumcorProblem};
