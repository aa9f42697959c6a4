//! Monte Carlo experiments: scenario configuration, the per-trial engine,
//! and SCR sweeps written as CSV.

pub mod config;
pub mod engine;
pub mod sweep;

pub use config::{PowerPolicyName, ScenarioConfig};
pub use engine::{run_trial, run_trial_traced, Diagnostics, Outcome, TrialOutcome, World};
pub use sweep::{estimate, run_sweep, write_csv, Axis, Execution, ScrEstimate, Tally};
