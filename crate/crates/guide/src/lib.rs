//! The user guide, compiled.
//!
//! Every module below embeds one chapter of `book/src/` verbatim, so
//! `cargo test -p guide --doc` builds and runs each code block in the book.
//! A chapter whose snippet stops compiling fails the test suite — the book
//! and the library cannot drift apart silently.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/problem.md")]
pub mod problem {}

#[doc = include_str!("../../../book/src/local-solver.md")]
pub mod local_solver {}

#[doc = include_str!("../../../book/src/relaxation.md")]
pub mod relaxation {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/kernel.md")]
pub mod kernel {}

#[doc = include_str!("../../../book/src/instances.md")]
pub mod instances {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
