//! Batch front end: configuration, data generators, manufactured solutions,
//! experiment execution and export.

pub mod config;
pub mod experiment;
pub mod export;
pub mod generators;
pub mod manufactured;

pub use config::{parse_config, ForcingSpec, InitialSpec, OutputSpec, RunSpec};
pub use experiment::{
    audit_block, audit_stored, decompose, execute, run_experiment, sweep, ExitStatus, Outcome, Report,
    SweepParam,
};
pub use manufactured::{manufactured_case, ManufacturedCase};
