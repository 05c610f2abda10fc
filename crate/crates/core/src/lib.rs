//! Orthogonal Matching Pursuit with full iteration traces, matrix
//! diagnostics (coherence, restricted isometry constants), brute-force
//! oracles, checkers for residual-decay bounds, and seeded Monte Carlo
//! experiments.

pub mod analysis;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod omp;
pub mod oracles;
pub mod plot;
pub mod rng;
pub mod sensing;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use omp::{omp_solve, omp_solve_default, OmpTrace, SparseVector, StopRule, Termination};
pub use sensing::{Ensemble, SensingMatrix};
