//! Monte Carlo driver: configuration, the per-replication election
//! engine, parameter sweeps, and result reporting.

pub mod config;
pub mod engine;
pub mod report;
pub mod sweep;

pub use config::{AdversaryConfig, AdversaryParams, Mode, Seeds, SimConfig, TargetSpec};
pub use engine::{
    derive_stream, run_election, run_election_detailed, DetectionReport, ElectionDetail,
    ElectionResult, SimError,
};
pub use report::{render, report_file};
pub use sweep::{sweep, sweep_csv, SweepAxis, SweepRow};
