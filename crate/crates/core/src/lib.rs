//! Precheck-sequence detection of false base stations during handover.
//!
//! The target base station picks a random run of symbols from a public
//! table and sends it to the UE over the trusted source leg. Its uplink
//! allocation then carries the same run over the air. A false base station
//! that overhears the sync request has to guess the run, so the UE can tell
//! the two allocations apart by their bit error rate against the expected
//! sequence.
//!
//! Modules, bottom up: [`phy`] (QAM, zero-padded block channel, ZF
//! equalizer), [`seqtable`], [`geometry`], [`protocol`], [`adversary`],
//! [`detectors`] and the Monte Carlo [`harness`].

pub mod adversary;
pub mod detectors;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod phy;
pub mod protocol;
pub mod seqtable;

pub use error::{Error, Result};
