//! Front end for the spin-phonon model: configuration, orchestration and
//! file output.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use output::{verify, RunManifest};
pub use run::{run_modes, run_scaling_study, run_sweep, run_trace};
