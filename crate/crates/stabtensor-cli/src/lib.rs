//! Job parsing, execution and reporting for the `stabtensor` binary.

pub mod jobspec;
pub mod report;
pub mod run;
pub mod suite;

pub use jobspec::{parse_jobspec, Command, JobError, JobSpec};
pub use report::Report;
pub use run::{run, Overrides, RunError};
