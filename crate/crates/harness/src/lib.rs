//! Orchestration for `scalinv-core`: sweep configuration, deterministic
//! parallel realization farming, checkpoint/resume and output files.

pub mod config;
mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{OutputFormat, SweepConfig, Task};
pub use error::{HarnessError, HarnessResult};
pub use output::{emit_outputs, read_manifest, Manifest};
pub use run::{resume_sweep, run_sweep, run_sweep_with, ResultSet, RunOptions};
