//! Batch front-end: reads a run configuration, computes the law of the
//! reflected walk by the selected methods, and reports how well they agree.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Format, RunConfig, Tolerances};
pub use error::{ConfigError, RunError};
pub use report::AgreementReport;
pub use run::{run, RunOutput};
