//! False base station model.
//!
//! The FBS knows the public table and the fixed selection length, overhears
//! the UE's sync request to the target BS, and answers with a forged UL
//! allocation that claims to come from the target BS. It never sees the
//! `HandoverRequestAck` on the source leg, so it has to guess the start index.
//!
//! Timing: the forgery leaves no earlier than `reaction_delay_s` after the
//! sync is overheard. With `aim_window` set, the FBS also holds the forgery so
//! that it reaches the UE `lead_s` ahead of the anticipated arrival of the
//! target's response, keeping it inside the UE's expected arrival period.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{propagation_delay, Deployment, RadioLink};
use crate::protocol::{regular_info_for, HandoverMessage, NodeId};
use crate::seqtable::{select_precheck, PrecheckSelection, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPolicy {
    FixedDbm(f64),
    /// Mean RSS at the UE equal to the target BS's mean RSS at the UE.
    MatchTargetAtUe,
    SweepPoint(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessPolicy {
    UniformStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbsStrategy {
    pub power_policy: PowerPolicy,
    pub guess_policy: GuessPolicy,
    pub reaction_delay_s: f64,
    pub aim_window: bool,
    pub lead_s: f64,
    pub max_power_dbm: f64,
    /// Stronger adversary that learns the true start index.
    pub oracle_start: bool,
}

impl Default for FbsStrategy {
    fn default() -> Self {
        Self {
            power_policy: PowerPolicy::MatchTargetAtUe,
            guess_policy: GuessPolicy::UniformStart,
            reaction_delay_s: 5e-6,
            aim_window: true,
            lead_s: 1e-6,
            max_power_dbm: 46.0,
            oracle_start: false,
        }
    }
}

impl FbsStrategy {
    pub fn validate(&self) -> Result<()> {
        if !(self.reaction_delay_s > 0.0) {
            return Err(Error::config(
                "fbs.reaction_delay_us",
                "the FBS cannot react instantaneously",
            ));
        }
        if !(self.lead_s >= 0.0) {
            return Err(Error::config("fbs.lead_us", "must be non-negative"));
        }
        Ok(())
    }
}

/// Transmit power decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbsPower {
    pub tx_power_dbm: f64,
    /// `MatchTargetAtUe` needed more than `max_power_dbm`.
    pub clamped: bool,
}

/// Transmit power for this deployment. `target_link` is the target BS's
/// radio link; the FBS shares its propagation model.
pub fn fbs_power_at_ue(
    strategy: &FbsStrategy,
    deployment: &Deployment,
    target_link: &RadioLink,
) -> FbsPower {
    match strategy.power_policy {
        PowerPolicy::FixedDbm(p) | PowerPolicy::SweepPoint(p) => FbsPower {
            tx_power_dbm: p,
            clamped: false,
        },
        PowerPolicy::MatchTargetAtUe => {
            let wanted = target_link.mean_rss_dbm(deployment.ue_to_target());
            let needed = target_link.tx_power_for_rss(wanted, deployment.ue_to_fbs());
            if needed > strategy.max_power_dbm {
                log::warn!(
                    "FBS needs {needed:.2} dBm to match the target, clamped to {:.2} dBm",
                    strategy.max_power_dbm
                );
                FbsPower {
                    tx_power_dbm: strategy.max_power_dbm,
                    clamped: true,
                }
            } else {
                FbsPower {
                    tx_power_dbm: needed,
                    clamped: false,
                }
            }
        }
    }
}

/// What the FBS knows when it overhears the sync request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheardSync {
    /// When the sync reached the FBS.
    pub heard_at: f64,
    /// When the UE sent it.
    pub sent_at: f64,
}

/// The forged UL allocation and the FBS's guess.
#[derive(Debug, Clone, PartialEq)]
pub struct Forgery {
    pub send_time: f64,
    pub guess: PrecheckSelection,
    pub msg: HandoverMessage,
}

/// Build the forgery for one overheard sync.
///
/// `anticipated_arrival` is when the target's response is due at the UE;
/// `true_start` is only consulted with `oracle_start`.
#[allow(clippy::too_many_arguments)]
pub fn fbs_react<R: Rng + ?Sized>(
    sync: OverheardSync,
    ue_id: u32,
    table: &SymbolTable,
    seq_length: usize,
    strategy: &FbsStrategy,
    fbs_to_ue_m: f64,
    anticipated_arrival: f64,
    true_start: usize,
    rng: &mut R,
) -> Result<Forgery> {
    let start = if strategy.oracle_start {
        true_start
    } else {
        match strategy.guess_policy {
            GuessPolicy::UniformStart => rng.random_range(0..table.len()),
        }
    };
    let guess = PrecheckSelection {
        start,
        length: seq_length,
    };
    let symbols = select_precheck(table, guess)?;

    let earliest = sync.heard_at + strategy.reaction_delay_s;
    let send_time = if strategy.aim_window {
        let aimed = anticipated_arrival - strategy.lead_s - propagation_delay(fbs_to_ue_m);
        earliest.max(aimed)
    } else {
        earliest
    };

    Ok(Forgery {
        send_time,
        guess,
        msg: HandoverMessage::UlAllocation {
            symbols,
            regular_info: regular_info_for(ue_id),
            claimed_sender: NodeId::TargetBs,
        },
    })
}

/// Per-trial FBS state: at most one forgery, and none once the genuine
/// allocation has been overheard.
#[derive(Debug, Clone, Default)]
pub struct FbsState {
    pub heard_legit_allocation: bool,
    pub forged: bool,
}

impl FbsState {
    pub fn may_transmit(&self) -> bool {
        !self.forged && !self.heard_legit_allocation
    }
}
