//! Probabilistic inverse optimal transport on finite spaces.
//!
//! Given an observed positive coupling `T`, the set of cost matrices whose
//! entropy-regularized transport plan equals `T` is an affine subspace of
//! dimension `m + n - 1`, cut out by the cross-ratios of `T`. This crate
//! characterizes that set and samples posterior distributions over it:
//!
//! - [`matrix`]: couplings, costs, kernels, marginals and the transforms between them
//! - [`sinkhorn`]: forward solver and manifold membership test
//! - [`crossratio`]: cross-ratio basis, equivalence, scaling recovery, hyperplane distance
//! - [`priors`]: Dirichlet (whole-cost and column-wise kernel) and symmetric Gibbs priors
//! - [`samplers`]: MetroMC and MHMC chains with deterministic seeding
//! - [`inference`]: noisy and incomplete observation workflows
//! - [`diagnostics`]: autocorrelation, running averages, KDE, simplex embedding
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod crossratio;
pub mod diagnostics;
mod error;
pub mod inference;
mod linalg;
pub mod lp;
pub mod math;
pub mod matrix;
pub mod priors;
pub mod rng;
pub mod samplers;
pub mod sinkhorn;

pub use error::{Error, Result};
pub use matrix::{CostMatrix, Coupling, Kernel, Marginals, Matrix, ScalingPair};
pub use priors::{LogDensity, PriorKind, PriorSpec};
pub use samplers::{ChainConfig, ChainOutput, SamplerKind};
