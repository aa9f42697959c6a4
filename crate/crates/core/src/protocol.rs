//! Handover with sequence verification: message vocabulary, the per-node
//! state machines for the UE, the source BS and the target BS, and the event
//! queue that orders deliveries.
//!
//! The five steps are:
//!
//! 1. The target BS publishes its table of symbols (done once per world).
//! 2. On `HandoverRequest` the target BS draws a selection and answers the
//!    source BS with `HandoverRequestAck { start_index, seq_length }`.
//! 3. The source BS cuts the selected symbols out of the table and forwards
//!    them to the UE (`PrecheckForward`). The UE keeps the demodulated bits
//!    as its standard precheck sequence.
//! 4. The UE sends `SyncRequest` to the target BS and opens an arrival window.
//! 5. The target BS answers with `UlAllocation` carrying the same selected
//!    symbols. The UE compares everything it collects in the window.
//!
//! State machines never see the physical layer directly. The engine passes
//! radio messages through a link and hands the UE a [`Reception`] with the
//! equalized precheck symbols.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::detectors::{CandidateSignal, DecisionContext, DetectionOutcome, Origin, Verdict};
use crate::error::{Error, Result};
use crate::geometry::propagation_delay;
use crate::phy::{demodulate, Modulation};
use crate::seqtable::{random_selection, select_precheck, PrecheckSelection, SymbolTable};

/// Length of the opaque regular-information blob (cell ID, TA, UL grant).
pub const REGULAR_INFO_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Ue,
    SourceBs,
    TargetBs,
    Fbs,
}

impl NodeId {
    pub fn name(self) -> &'static str {
        match self {
            NodeId::Ue => "ue",
            NodeId::SourceBs => "source_bs",
            NodeId::TargetBs => "target_bs",
            NodeId::Fbs => "fbs",
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HandoverMessage {
    MeasurementReport {
        source_rss_dbm: f64,
        target_rss_dbm: f64,
    },
    HandoverRequest {
        ue_id: u32,
    },
    HandoverRequestAck {
        ue_id: u32,
        start_index: usize,
        seq_length: usize,
        regular_info: Vec<u8>,
    },
    PrecheckForward {
        symbols: Vec<Complex64>,
        regular_info: Vec<u8>,
    },
    SyncRequest {
        ue_id: u32,
    },
    UlAllocation {
        symbols: Vec<Complex64>,
        regular_info: Vec<u8>,
        /// Identity claimed on the air; a forgery claims the target BS.
        claimed_sender: NodeId,
    },
}

impl HandoverMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            HandoverMessage::MeasurementReport { .. } => "MeasurementReport",
            HandoverMessage::HandoverRequest { .. } => "HandoverRequest",
            HandoverMessage::HandoverRequestAck { .. } => "HandoverRequestAck",
            HandoverMessage::PrecheckForward { .. } => "PrecheckForward",
            HandoverMessage::SyncRequest { .. } => "SyncRequest",
            HandoverMessage::UlAllocation { .. } => "UlAllocation",
        }
    }
}

/// A message in flight. `sender` is the true transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub send_time: f64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub msg: HandoverMessage,
}

/// A radio message as it reaches the UE.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub envelope: Envelope,
    pub arrival_time: f64,
    pub rss_dbm: f64,
    /// Equalized precheck symbols; empty for messages without any.
    pub received_symbols: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Transmit `msg` to `to` after holding it for `hold` seconds.
    Send {
        to: NodeId,
        msg: HandoverMessage,
        hold: f64,
    },
    /// Wake the emitting node at absolute time `at`.
    Timer { at: f64, timer: TimerKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    WindowClosed,
    LateDeadline,
}

fn out_of_order(node: NodeId, phase: impl fmt::Debug, what: &str) -> Error {
    Error::Protocol(format!("{node} in phase {phase:?} cannot accept {what}"))
}

/// Arrival window `(t_lo, t_hi)` for the target's response to a sync sent at
/// `sync_send_time`: round-trip propagation plus processing, ± `slack_s`.
pub fn expected_window(
    sync_send_time: f64,
    distance_m: f64,
    processing_delay_s: f64,
    slack_s: f64,
) -> (f64, f64) {
    let center = sync_send_time + 2.0 * propagation_delay(distance_m) + processing_delay_s;
    (center - slack_s, center + slack_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourcePhase {
    Serving,
    AwaitingAck,
    Forwarded,
}

#[derive(Debug, Clone)]
pub struct SourceBs {
    pub phase: SourcePhase,
    pub hysteresis_db: f64,
    pub ue_id: u32,
    table: Arc<SymbolTable>,
}

impl SourceBs {
    pub fn new(table: Arc<SymbolTable>, hysteresis_db: f64, ue_id: u32) -> Self {
        Self {
            phase: SourcePhase::Serving,
            hysteresis_db,
            ue_id,
            table,
        }
    }

    pub fn step(&mut self, msg: &HandoverMessage) -> Result<Vec<Action>> {
        match (self.phase, msg) {
            (
                SourcePhase::Serving,
                HandoverMessage::MeasurementReport {
                    source_rss_dbm,
                    target_rss_dbm,
                },
            ) => {
                if target_rss_dbm - source_rss_dbm > self.hysteresis_db {
                    self.phase = SourcePhase::AwaitingAck;
                    Ok(vec![Action::Send {
                        to: NodeId::TargetBs,
                        msg: HandoverMessage::HandoverRequest { ue_id: self.ue_id },
                        hold: 0.0,
                    }])
                } else {
                    Ok(Vec::new())
                }
            }
            (
                SourcePhase::AwaitingAck,
                HandoverMessage::HandoverRequestAck {
                    ue_id,
                    start_index,
                    seq_length,
                    regular_info,
                },
            ) if *ue_id == self.ue_id => {
                let symbols = select_precheck(
                    &self.table,
                    PrecheckSelection {
                        start: *start_index,
                        length: *seq_length,
                    },
                )?;
                self.phase = SourcePhase::Forwarded;
                Ok(vec![Action::Send {
                    to: NodeId::Ue,
                    msg: HandoverMessage::PrecheckForward {
                        symbols,
                        regular_info: regular_info.clone(),
                    },
                    hold: 0.0,
                }])
            }
            (phase, msg) => Err(out_of_order(NodeId::SourceBs, phase, msg.kind())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetPhase {
    Idle,
    Prepared,
    Allocated,
}

#[derive(Debug, Clone)]
pub struct TargetBs {
    pub phase: TargetPhase,
    pub seq_length: usize,
    pub processing_delay_s: f64,
    pub selection: Option<PrecheckSelection>,
    ue_id: Option<u32>,
    regular_info: Vec<u8>,
    table: Arc<SymbolTable>,
}

impl TargetBs {
    pub fn new(table: Arc<SymbolTable>, seq_length: usize, processing_delay_s: f64) -> Self {
        Self {
            phase: TargetPhase::Idle,
            seq_length,
            processing_delay_s,
            selection: None,
            ue_id: None,
            regular_info: Vec::new(),
            table,
        }
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn step<R: Rng + ?Sized>(&mut self, msg: &HandoverMessage, rng: &mut R) -> Result<Vec<Action>> {
        match (self.phase, msg) {
            (TargetPhase::Idle, HandoverMessage::HandoverRequest { ue_id }) => {
                let sel = random_selection(self.table.len(), self.seq_length, rng)?;
                self.selection = Some(sel);
                self.ue_id = Some(*ue_id);
                self.regular_info = regular_info_for(*ue_id);
                self.phase = TargetPhase::Prepared;
                Ok(vec![Action::Send {
                    to: NodeId::SourceBs,
                    msg: HandoverMessage::HandoverRequestAck {
                        ue_id: *ue_id,
                        start_index: sel.start,
                        seq_length: sel.length,
                        regular_info: self.regular_info.clone(),
                    },
                    hold: 0.0,
                }])
            }
            (TargetPhase::Prepared, HandoverMessage::SyncRequest { ue_id }) => {
                if Some(*ue_id) != self.ue_id {
                    log::debug!("target BS ignoring sync from unknown UE {ue_id}");
                    return Ok(Vec::new());
                }
                let sel = self.selection.expect("selection drawn in Idle → Prepared");
                let symbols = select_precheck(&self.table, sel)?;
                self.phase = TargetPhase::Allocated;
                Ok(vec![Action::Send {
                    to: NodeId::Ue,
                    msg: HandoverMessage::UlAllocation {
                        symbols,
                        regular_info: self.regular_info.clone(),
                        claimed_sender: NodeId::TargetBs,
                    },
                    hold: self.processing_delay_s,
                }])
            }
            (phase, msg) => Err(out_of_order(NodeId::TargetBs, phase, msg.kind())),
        }
    }
}

/// Opaque UL grant / TA payload. Only its length matters to the simulation.
pub fn regular_info_for(ue_id: u32) -> Vec<u8> {
    let mut info = vec![0u8; REGULAR_INFO_LEN];
    info[..4].copy_from_slice(&ue_id.to_be_bytes());
    info
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UePhase {
    Connected,
    AwaitingAck,
    AwaitingUlAlloc,
    Verifying,
    HandedOver,
    AttackDetected,
    CheatSucceeded,
}

impl UePhase {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            UePhase::HandedOver | UePhase::AttackDetected | UePhase::CheatSucceeded
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UeInput {
    /// Kick off the procedure with a measurement report.
    Start {
        source_rss_dbm: f64,
        target_rss_dbm: f64,
    },
    Radio(Reception),
    Timer(TimerKind),
}

#[derive(Debug, Clone)]
pub struct Ue {
    pub id: u32,
    pub phase: UePhase,
    pub standard_precheck: Option<Vec<bool>>,
    pub expected_window: Option<(f64, f64)>,
    pub candidates: Vec<CandidateSignal>,
    pub verdict: Option<Verdict>,
    /// UL allocations that arrived before any sync was sent.
    pub premature: usize,
    modulation: Modulation,
    target_distance_m: f64,
    processing_delay_s: f64,
    slack_s: f64,
    late_grace_s: f64,
    decision: DecisionContext,
}

impl Ue {
    pub fn new(
        id: u32,
        modulation: Modulation,
        target_distance_m: f64,
        processing_delay_s: f64,
        slack_s: f64,
        decision: DecisionContext,
    ) -> Self {
        Self {
            id,
            phase: UePhase::Connected,
            standard_precheck: None,
            expected_window: None,
            candidates: Vec::new(),
            verdict: None,
            premature: 0,
            modulation,
            target_distance_m,
            processing_delay_s,
            slack_s,
            late_grace_s: processing_delay_s + 2.0 * slack_s,
            decision,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, now: f64, input: UeInput, rng: &mut R) -> Result<Vec<Action>> {
        match (self.phase, input) {
            (
                UePhase::Connected,
                UeInput::Start {
                    source_rss_dbm,
                    target_rss_dbm,
                },
            ) => {
                self.phase = UePhase::AwaitingAck;
                Ok(vec![Action::Send {
                    to: NodeId::SourceBs,
                    msg: HandoverMessage::MeasurementReport {
                        source_rss_dbm,
                        target_rss_dbm,
                    },
                    hold: 0.0,
                }])
            }
            (UePhase::AwaitingAck, UeInput::Radio(rx))
                if matches!(rx.envelope.msg, HandoverMessage::PrecheckForward { .. }) =>
            {
                self.standard_precheck = Some(demodulate(&rx.received_symbols, &self.modulation));
                let window = expected_window(
                    now,
                    self.target_distance_m,
                    self.processing_delay_s,
                    self.slack_s,
                );
                self.expected_window = Some(window);
                self.phase = UePhase::AwaitingUlAlloc;
                Ok(vec![
                    Action::Send {
                        to: NodeId::TargetBs,
                        msg: HandoverMessage::SyncRequest { ue_id: self.id },
                        hold: 0.0,
                    },
                    Action::Timer {
                        at: window.1,
                        timer: TimerKind::WindowClosed,
                    },
                ])
            }
            (UePhase::Connected | UePhase::AwaitingAck, UeInput::Radio(rx))
                if matches!(rx.envelope.msg, HandoverMessage::UlAllocation { .. }) =>
            {
                // no sync has been sent, so no legitimate target BS can be answering
                self.premature += 1;
                Ok(Vec::new())
            }
            (UePhase::AwaitingUlAlloc, UeInput::Radio(rx)) => {
                let HandoverMessage::UlAllocation { claimed_sender, .. } = rx.envelope.msg else {
                    return Err(out_of_order(NodeId::Ue, self.phase, rx.envelope.msg.kind()));
                };
                self.candidates.push(CandidateSignal {
                    demodulated_precheck: demodulate(&rx.received_symbols, &self.modulation),
                    arrival_time: rx.arrival_time,
                    rss_dbm: rx.rss_dbm,
                    claimed_sender,
                    true_origin: if rx.envelope.sender == NodeId::Fbs {
                        Origin::Fbs
                    } else {
                        Origin::Legit
                    },
                });
                let (_, t_hi) = self.expected_window.expect("window set with sync");
                if now > t_hi {
                    // window already closed empty; the first straggler settles it
                    self.decide(rng)?;
                }
                Ok(Vec::new())
            }
            (UePhase::AwaitingUlAlloc, UeInput::Timer(TimerKind::WindowClosed)) => {
                if self.candidates.is_empty() {
                    Ok(vec![Action::Timer {
                        at: now + self.late_grace_s,
                        timer: TimerKind::LateDeadline,
                    }])
                } else {
                    self.decide(rng)?;
                    Ok(Vec::new())
                }
            }
            (UePhase::AwaitingUlAlloc, UeInput::Timer(TimerKind::LateDeadline)) => {
                self.decide(rng)?;
                Ok(Vec::new())
            }
            (phase, input) if phase.is_terminal() => {
                // a late duplicate after the decision changes nothing
                if let UeInput::Radio(rx) = &input {
                    if matches!(rx.envelope.msg, HandoverMessage::UlAllocation { .. }) {
                        return Ok(Vec::new());
                    }
                }
                Err(out_of_order(NodeId::Ue, phase, input_kind(&input)))
            }
            (phase, input) => Err(out_of_order(NodeId::Ue, phase, input_kind(&input))),
        }
    }

    fn decide<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.phase = UePhase::Verifying;
        let standard = self
            .standard_precheck
            .as_deref()
            .ok_or_else(|| Error::Protocol("verification without a standard precheck".into()))?;
        let window = self.expected_window.expect("window set with sync");
        let verdict = self
            .decision
            .decide(&self.candidates, standard, window, rng)?;
        self.phase = match verdict.outcome {
            DetectionOutcome::LegitChosen => UePhase::HandedOver,
            DetectionOutcome::FbsChosen => UePhase::CheatSucceeded,
            DetectionOutcome::AllRejected => UePhase::AttackDetected,
        };
        self.verdict = Some(verdict);
        Ok(())
    }
}

fn input_kind(input: &UeInput) -> &'static str {
    match input {
        UeInput::Start { .. } => "Start",
        UeInput::Radio(rx) => rx.envelope.msg.kind(),
        UeInput::Timer(TimerKind::WindowClosed) => "WindowClosed",
        UeInput::Timer(TimerKind::LateDeadline) => "LateDeadline",
    }
}

/// One line of the optional per-trial message trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub kind: &'static str,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9},{},{},{}", self.time, self.sender, self.receiver, self.kind)
    }
}

/// Min-queue ordered by `(time, insertion sequence)`.
#[derive(Debug)]
pub struct EventQueue<T> {
    heap: BinaryHeap<Scheduled<T>>,
    next_seq: u64,
}

#[derive(Debug)]
struct Scheduled<T> {
    time: f64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Scheduled<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Scheduled<T> {}

impl<T> PartialOrd for Scheduled<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Scheduled<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, item: T) {
        self.heap.push(Scheduled {
            time,
            seq: self.next_seq,
            item,
        });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, T)> {
        self.heap.pop().map(|s| (s.time, s.item))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
