//! Discrete-event simulator and protocol engine for a phone-voting
//! scheme with voice-based authentication, a secret random stopping
//! time, receipt handling, adversary strategies with cost accounting,
//! and statistical fraud detection.
//!
//! Modules:
//! - [`domain`]: shared value types, the event/trace model, transcripts.
//! - [`verify`]: EER-calibrated speaker verification and the ensemble.
//! - [`authority`]: the election authority session state machine.
//! - [`stoptime`]: stopping-time sampling and hash commitments.
//! - [`population`]: honest voter behavior and revote reactions.
//! - [`adversary`]: attack strategies and cost settlement.
//! - [`audit`]: fraud detectors and multi-authority counting.
//! - [`harness`]: config, the per-replication engine, sweeps, reports.

pub mod adversary;
pub mod audit;
pub mod authority;
pub mod domain;
pub mod harness;
pub mod population;
pub mod stoptime;
pub mod verify;
