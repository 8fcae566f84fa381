//! Configuration, orchestration and persistence for strassen-kit
//! experiments.

// `!(x > 0.0)` is the NaN-rejecting form of the range guards; `x <= 0.0`
// would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod runner;

pub use config::{Config, Experiment};
pub use error::{CliError, Result};
pub use runner::{run, RunManifest};
