//! Compressive imaging toolkit: variable-density Fourier and
//! Walsh–Hadamard sampling with total-variation reconstruction.
//!
//! The crate is organized bottom-up:
//! - [`grid`]: power-of-two grids, frequency orderings, index bijections
//! - [`transforms`]: fast DFT / sequency-ordered WHT / discrete Haar, with
//!   dense oracles for testing
//! - [`gradient`]: periodic finite-difference gradient, divergence, TV
//! - [`densities`]: variable-density probability masses and the Γ constant
//! - [`patterns`]: seeded sampling-pattern generators
//! - [`operators`]: subsampled measurement operators and incoherence Θ
//! - [`solver`]: smoothed TV minimization under a measurement constraint
//! - [`analysis`]: error metrics and perturbation probes
//! - [`phantoms`]: synthetic test images with known gradient sparsity
//! - [`io`] / [`experiment`]: file formats and batch experiment runs

pub mod analysis;
pub mod densities;
pub mod error;
pub mod experiment;
pub mod gradient;
pub mod grid;
pub mod io;
pub mod operators;
pub mod patterns;
pub mod phantoms;
pub mod solver;
pub mod transforms;

#[cfg(test)]
mod testutil;

pub use analysis::{best_s_term, psnr, rel_l2_gradient, rel_l2_image, ErrorReport, SparsityNorm};
pub use densities::{build_density, gamma_constant, q_omega, Density, DensityKind, NormKind};
pub use error::{Result, TvciError};
pub use gradient::{grad, grad_adjoint, tv_norm, GradField, TvMode};
pub use grid::{Convention, FreqIndex, Grid};
pub use operators::{incoherence_theta, HaarBasisKind, MeasurementOp, ThetaMode};
pub use patterns::Pattern;
pub use phantoms::{piecewise_constant_1d, random_blocks, shepp_logan, Phantom};
pub use solver::{solve_tv, ReconResult, SolverConfig};
pub use transforms::{dense_oracle, HaarCoeffs, Signal, TransformKind};
