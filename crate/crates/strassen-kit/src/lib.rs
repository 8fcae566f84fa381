//! Additive processes from their characteristics: simulation, rate-function
//! calculus, rare-event estimation and functional-LIL experiments.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`characteristics`] — process specifications `(C, K_r, A)` with exact
//!    moments, cumulants, exponential-moment bounds and growth-condition
//!    checks;
//! 2. [`sampler`] — reproducible path simulation and the discretizations
//!    `X(⌊ns⌋)/S(n)` and snapshots `X(t·)/S(t)`;
//! 3. [`ratefn`] — the quadratic path rate function `I`, its variational dual
//!    `J` with an explicit discrete maximizer, constrained infima (box QP) and
//!    sublevel-set geometry;
//! 4. [`mdp`] — tail-probability estimation (direct, exponentially tilted, or
//!    exact Gaussian) and comparison of speed-normalized empirical rates with
//!    the variational prediction;
//! 5. [`strassen`] — geometric snapshot schedules, cluster-set distance
//!    statistics and the iterated-logarithm statistic.
//!
//! All estimators are deterministic functions of `(spec, parameters, seed)`
//! regardless of worker count.

// `!(x > 0.0)` is the NaN-rejecting form of the range guards; `x <= 0.0`
// would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod error;
pub mod grid;
pub mod mdp;
pub mod ratefn;
pub mod sampler;
pub mod strassen;
pub(crate) mod stats;
pub mod timefn;

pub use characteristics::{JumpKernel, ProcessSpec, ScalingFn};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use ratefn::RateParams;
pub use sampler::SamplePath;
