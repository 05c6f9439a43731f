//! Locally stationary time-series toolkit: process simulation, studentized
//! partial sums, Gaussian comparison processes, rate-exponent calculus, and a
//! Monte Carlo power-study harness.

pub mod gausslim;
pub mod harness;
pub mod ks;
pub mod matkit;
pub mod procgen;
pub mod rates;
pub mod rng;
pub mod sumproc;

/// Scalar type used by the simulation pipeline.
pub type Scalar = f64;
/// Symmetric matrix over the pipeline scalar.
pub type SymMatrix64 = matkit::SymMatrix<f64>;
/// Dense matrix over the pipeline scalar.
pub type Mat64 = matkit::Mat<f64>;
