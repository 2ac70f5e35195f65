//! Traveling waves of the nonlocal Fisher-KPP equation
//! `∂t u = ∂xx u + µ u (1 − φ ∗ u)`.
//!
//! Kernels and their moments, threshold speeds and Turing analysis of the
//! uniform state, lab-frame and moving-frame evolution on a truncated line,
//! and diagnostics of the computed profiles.

pub mod analysis;
pub mod convolution;
pub mod diagnostics;
pub mod grid;
pub mod kernel;
pub mod quadrature;
pub mod solver;
mod tridiagonal;

pub use analysis::{DispersionReport, MuCritical, Thresholds};
pub use grid::{Field, Grid};
pub use kernel::{Kernel, TabulatedKernel};
pub use solver::{ModelParams, Reaction, SimConfig, Stepper};
