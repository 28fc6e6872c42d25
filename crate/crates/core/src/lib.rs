//! Intermediate-scale statistics for fractional parts `{alpha a_n}` of
//! real lacunary sequences.
//!
//! - [`sequence`]: lacunary sequences and high-precision fractional parts.
//! - [`kernels`]: tent kernels, Stirling numbers, Poisson/normal moments.
//! - [`stats`]: counting function, number variance, k-level correlations,
//!   the Fourier side of the pair correlation, and the empirical CLT.
//! - [`random_model`]: i.i.d. uniform points as the Poissonian reference.
//! - [`harness`]: seeded experiments, config files and reports.

pub mod bigfloat;
pub mod harness;
pub mod kernels;
pub mod random_model;
pub mod sequence;
pub mod stats;

pub use bigfloat::BigFloat;
pub use sequence::{frac_points, FracPointSet, SequenceKind, SequenceSpec};
pub use stats::{StatResult, WindowParams};
