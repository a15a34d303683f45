//! Numerics for benchmarking two-qubit quantum states.
//!
//! The crate computes the standard state benchmarks (fidelity, trace
//! distance, linear and von Neumann entropy, concurrence, tangle) on
//! validated density matrices, builds the depolarized state families used
//! to probe them, expands each benchmark's sensitivity to a depolarizing
//! channel, traces constant-fidelity contours in the linear-entropy/tangle
//! plane, and simulates noisy tomographic reconstruction clouds.

pub mod curves;
pub mod linalg;
pub mod measures;
pub mod perturbation;
pub mod states;
pub mod tomo;

// pub use linalg::{ComplexMatrix, HermitianSpectrum};
// pub use measures::MeasureReport;
// pub use states::{DensityMatrix, FamilyParams};
