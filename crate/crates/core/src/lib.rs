//! Spectra of a finite cylinder with frequently alternating Dirichlet and
//! Neumann strips on its lateral surface.
//!
//! [`spectrum`] enumerates the limiting (all-Dirichlet) eigenvalues.
//! [`correction`] gives the first-order shift and the splitting of degenerate
//! clusters. [`blayer`] and [`outer`] build the boundary layer and the
//! asymptotic eigenfunction. [`direct`] solves the discrete problem for
//! comparison, and [`harness`] drives sweeps and writes reports.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blayer;
pub mod correction;
pub mod direct;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod outer;
pub mod quad;
pub mod spectrum;

pub use error::{Error, Result};
