//! Config-driven experiment runner behind the `nhqc` command line.

mod config;
mod run;

pub use config::{
    ExperimentConfig, ExperimentKind, GateConfig, QptConfig, RbModel, RbSection, SchemeEntry,
    SidebandConfig, SweepConfig, SweepMode,
};
pub use run::{
    provenance_header, run_named_experiment, run_sweep, RunOutput, SweepRow, SweepTable, VERSION,
};
