//! Configuration files, output formats, parallel execution and the
//! experiment driver for `openqmc-core`.

pub mod config;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod output;
pub mod variance;

pub use config::{MatrixSpec, Method, RunConfig, RunFile};
pub use error::{CliError, CliResult};
pub use exec::Parallel;
pub use experiment::{run_experiment, run_prepared, write_outputs, RunOutput};
pub use variance::variance_harness;
