//! Sampling-and-query linear algebra: importance-sampling data structures,
//! randomized Kaczmarz and coordinate-descent solvers with sampled inner
//! products, and rejection-sampling access to the solutions they describe.
//!
//! The crate is organized around four layers:
//!
//! * [`sq`]: [`VectorSq`]/[`MatrixSq`], the O(log n) squared-magnitude
//!   samplers everything else consumes;
//! * [`solvers`]: the iterative schemes and their parameter schedules;
//! * [`access`]: turning a sparse solution description into full
//!   sample/query/norm access via oversampling and rejection;
//! * [`oracle`]: dense small-scale ground truth used by benchmarks and
//!   tests.

pub mod access;
pub mod config;
pub mod description;
pub mod error;
pub mod fenwick;
pub mod oracle;
pub mod solvers;
pub mod sparse;
pub mod sq;
pub mod sum;
pub mod trace;

pub use access::{NormEstimate, OversampledAccess};
pub use config::SolverConfig;
pub use description::{DescriptionBasis, SparseDescription};
pub use error::{Error, Result};
pub use solvers::{DualSolveResult, SolveResult};
pub use sparse::CsrMatrix;
pub use sq::{MatrixLayout, MatrixSq, RowSq, VectorSq};
pub use trace::IterationTrace;
