//! Closed-form entropic optimal transport and Sinkhorn divergences between
//! Gaussian measures, their kernelized (RKHS) counterparts computed from Gram
//! matrices, sample-complexity and continuity bounds, and reproducible
//! experiment runners.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod kernel;
pub mod kernel_sinkhorn;
pub mod linalg;
pub mod seeding;

pub use error::{Error, Result};
pub use gaussian::{Epsilon, GaussianMeasure, SampleSet};
pub use kernel::KernelSpec;
pub use linalg::{PsdMatrix, SymMatrix};
