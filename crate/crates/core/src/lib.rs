//! Variable-exponent Lebesgue norms, fractional Gagliardo seminorms with
//! variable exponents, trace-embedding diagnostics and a solver for the
//! associated nonlocal Neumann energy.
//!
//! All pair sums use centroid quadrature with the diagonal excluded and a fixed
//! reduction order, so results do not depend on the number of threads.

pub mod cli;
pub mod embeddings;
pub mod error;
pub mod exponents;
pub mod expr;
pub mod geometry;
pub mod modular;
pub mod solver;

pub use error::{Error, Result};
