//! One Monte Carlo trial: sample a deployment and channels, run the handover
//! with sequence verification through the event queue, and report what the
//! UE ended up connected to.
//!
//! Random streams come from `ChaCha8Rng::seed_from_u64(base_seed)` with a
//! stream per purpose: stream 0 builds the table, stream 1 the RSS history,
//! and trial `i` runs on stream `i + 2`. A trial therefore depends only on
//! `(base_seed, i)` and the scenario, never on scheduling.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{fbs_power_at_ue, fbs_react, FbsState, FbsStrategy, Forgery, OverheardSync};
use crate::detectors::{DecisionContext, DetectionOutcome, Origin};
use crate::error::{Error, Result};
use crate::geometry::{propagation_delay, rss_dbm, sample_deployment, Deployment, GeometryConfig};
use crate::harness::config::ScenarioConfig;
use crate::phy::{noise_variance_for_snr, send_through, ChannelModel, Modulation};
use crate::protocol::{
    Action, Envelope, EventQueue, HandoverMessage, NodeId, Reception, SourceBs, SourcePhase,
    TargetBs, TimerKind, TraceEntry, Ue, UeInput, UePhase,
};
use crate::seqtable::{generate_table, SymbolTable};

/// Events processed per trial before it is declared deadlocked.
pub const EVENT_BUDGET: usize = 10_000;

const STREAM_TABLE: u64 = 0;
const STREAM_HISTORY: u64 = 1;
const FIRST_TRIAL_STREAM: u64 = 2;

const UE_ID: u32 = 1;

pub fn trial_rng(base_seed: u64, trial_index: u64) -> ChaCha8Rng {
    stream_rng(base_seed, FIRST_TRIAL_STREAM.wrapping_add(trial_index))
}

fn stream_rng(base_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream);
    rng
}

/// Everything shared by the trials of one scenario: the public table and
/// the RSS history the 3σ baseline relies on.
#[derive(Debug, Clone)]
pub struct World {
    cfg: ScenarioConfig,
    modulation: Modulation,
    table: Arc<SymbolTable>,
    geometry: GeometryConfig,
    strategy: FbsStrategy,
    rss_history: (f64, f64),
}

impl World {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let modulation = cfg.modulation()?;
        let table = match &cfg.table_file {
            Some(path) => {
                let t = SymbolTable::load(path, &modulation)?;
                if t.len() != cfg.table_length {
                    return Err(Error::config(
                        "table_file",
                        format!("{} holds {} symbols, table_length is {}", path.display(), t.len(), cfg.table_length),
                    ));
                }
                t
            }
            None => generate_table(
                cfg.table_length,
                &modulation,
                &mut stream_rng(cfg.base_seed, STREAM_TABLE),
            )?,
        };

        // the UE sits where the target's mean RSS beats the source's by the hysteresis
        let ratio = 10f64.powf(cfg.hysteresis_db / (10.0 * cfg.lbs_link.path_loss_exponent));
        let geometry = GeometryConfig {
            min_distance_ratio: ratio * (1.0 + 1e-9),
            ..cfg.geometry.clone()
        };

        let mut rng = stream_rng(cfg.base_seed, STREAM_HISTORY);
        let mut samples = Vec::with_capacity(cfg.rss_history);
        for _ in 0..cfg.rss_history {
            let d = sample_deployment(&geometry, &mut rng)?;
            samples.push(rss_dbm(&cfg.lbs_link, d.ue_to_target(), &mut rng));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);

        Ok(Self {
            strategy: cfg.fbs_strategy(),
            cfg,
            modulation,
            table: Arc::new(table),
            geometry,
            rss_history: (mean, var.sqrt()),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    /// Mean and standard deviation of honest target RSS reports.
    pub fn rss_history(&self) -> (f64, f64) {
        self.rss_history
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    LegitChosen,
    FbsChosen,
    AllRejected,
    /// The measurement report never triggered a handover.
    NoHandover,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub true_start: Option<usize>,
    pub fbs_guess: Option<usize>,
    pub legit_ber: Option<f64>,
    pub fbs_ber: Option<f64>,
    /// Arrival relative to the centre of the UE's window.
    pub legit_arrival_offset_s: Option<f64>,
    pub fbs_arrival_offset_s: Option<f64>,
    pub source_rss_dbm: f64,
    pub target_rss_dbm: f64,
    pub fbs_rss_dbm: Option<f64>,
    pub fbs_tx_power_dbm: Option<f64>,
    pub fbs_power_clamped: bool,
    pub fbs_snr_db: Option<f64>,
    pub protocol_errors: usize,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: u64,
    pub outcome: Outcome,
    pub ue_phase: UePhase,
    pub diagnostics: Diagnostics,
    /// Message trace, filled only by [`run_trial_traced`].
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug)]
enum Event {
    Deliver(Envelope),
    UeTimer(TimerKind),
    FbsHears(Envelope),
    FbsSend(Forgery),
}

struct RadioLeg {
    channel: ChannelModel,
    rss_dbm: f64,
}

struct Trial<'w> {
    world: &'w World,
    rng: ChaCha8Rng,
    deployment: Deployment,
    source_leg: RadioLeg,
    target_leg: RadioLeg,
    fbs_leg: Option<RadioLeg>,
    source: SourceBs,
    target: TargetBs,
    ue: Ue,
    fbs: FbsState,
    queue: EventQueue<Event>,
    diagnostics: Diagnostics,
    trace: Option<Vec<TraceEntry>>,
}

pub fn run_trial(world: &World, trial_index: u64) -> Result<TrialOutcome> {
    simulate(world, trial_index, false)
}

/// Like [`run_trial`], also recording every transmission.
pub fn run_trial_traced(world: &World, trial_index: u64) -> Result<TrialOutcome> {
    simulate(world, trial_index, true)
}

fn simulate(world: &World, trial_index: u64, traced: bool) -> Result<TrialOutcome> {
    let mut trial = Trial::setup(world, trial_index, traced)?;
    let outcome = trial.run(trial_index)?;
    Ok(TrialOutcome {
        index: trial_index,
        outcome,
        ue_phase: trial.ue.phase,
        diagnostics: trial.diagnostics,
        trace: trial.trace.unwrap_or_default(),
    })
}

impl<'w> Trial<'w> {
    fn setup(world: &'w World, trial_index: u64, traced: bool) -> Result<Self> {
        let cfg = &world.cfg;
        let mut rng = trial_rng(cfg.base_seed, trial_index);
        let deployment = sample_deployment(&world.geometry, &mut rng)?;

        let taps_source = ChannelModel::random_taps(cfg.channel_order, &mut rng);
        let taps_target = ChannelModel::random_taps(cfg.channel_order, &mut rng);
        let taps_fbs = ChannelModel::random_taps(cfg.channel_order, &mut rng);

        let link = &cfg.lbs_link;
        let source_rss = rss_dbm(link, deployment.ue_to_source(), &mut rng);
        let target_rss = rss_dbm(link, deployment.ue_to_target(), &mut rng);
        let legit_noise = noise_variance_for_snr(cfg.snr_db);
        let leg = |taps, noise, rss| -> Result<RadioLeg> {
            Ok(RadioLeg {
                channel: ChannelModel::new(taps, cfg.channel_order, cfg.block_size, noise)?,
                rss_dbm: rss,
            })
        };

        let mut diagnostics = Diagnostics {
            source_rss_dbm: source_rss,
            target_rss_dbm: target_rss,
            ..Diagnostics::default()
        };

        let fbs_leg = if cfg.fbs_enabled {
            let power = fbs_power_at_ue(&world.strategy, &deployment, link);
            let fbs_rss = rss_dbm(
                &link.with_tx_power(power.tx_power_dbm),
                deployment.ue_to_fbs(),
                &mut rng,
            );
            let snr = cfg.snr_db + (fbs_rss - target_rss);
            diagnostics.fbs_tx_power_dbm = Some(power.tx_power_dbm);
            diagnostics.fbs_power_clamped = power.clamped;
            diagnostics.fbs_rss_dbm = Some(fbs_rss);
            diagnostics.fbs_snr_db = Some(snr);
            Some(leg(taps_fbs, noise_variance_for_snr(snr), fbs_rss)?)
        } else {
            None
        };

        let decision = DecisionContext {
            kind: cfg.detector,
            ber_accept_threshold: cfg.ber_accept_threshold,
            rss_history_mean_dbm: world.rss_history.0,
            rss_history_std_db: world.rss_history.1,
            claimed_link: *link,
            target_distance_m: deployment.ue_to_target(),
            distance_threshold_m: cfg.distance_threshold_m,
            region_alpha: cfg.region_alpha,
        };

        Ok(Self {
            source_leg: leg(taps_source, legit_noise, source_rss)?,
            target_leg: leg(taps_target, legit_noise, target_rss)?,
            fbs_leg,
            source: SourceBs::new(world.table.clone(), cfg.hysteresis_db, UE_ID),
            target: TargetBs::new(world.table.clone(), cfg.seq_length, cfg.processing_delay_s),
            ue: Ue::new(
                UE_ID,
                world.modulation.clone(),
                deployment.ue_to_target(),
                cfg.processing_delay_s,
                cfg.slack_s,
                decision,
            ),
            fbs: FbsState::default(),
            queue: EventQueue::new(),
            diagnostics,
            trace: traced.then(Vec::new),
            deployment,
            world,
            rng,
        })
    }

    fn run(&mut self, trial_index: u64) -> Result<Outcome> {
        let start = UeInput::Start {
            source_rss_dbm: self.source_leg.rss_dbm,
            target_rss_dbm: self.target_leg.rss_dbm,
        };
        let actions = self.ue.step(0.0, start, &mut self.rng)?;
        self.dispatch(NodeId::Ue, 0.0, actions);

        while let Some((now, event)) = self.queue.pop() {
            self.diagnostics.events += 1;
            if self.diagnostics.events > EVENT_BUDGET {
                return Err(Error::Deadlock {
                    trial: trial_index,
                    budget: EVENT_BUDGET,
                });
            }
            self.handle(now, event)?;
            if self.ue.phase.is_terminal() {
                break;
            }
        }

        self.diagnostics.true_start = self.target.selection.map(|s| s.start);
        if !self.ue.phase.is_terminal() {
            if self.source.phase == SourcePhase::Serving {
                return Ok(Outcome::NoHandover);
            }
            return Err(Error::Protocol(format!(
                "trial {trial_index}: event queue drained with UE in {:?}",
                self.ue.phase
            )));
        }
        self.collect_verdict_diagnostics();
        let verdict = self.ue.verdict.as_ref().expect("terminal UE has a verdict");
        Ok(match verdict.outcome {
            DetectionOutcome::LegitChosen => Outcome::LegitChosen,
            DetectionOutcome::FbsChosen => Outcome::FbsChosen,
            DetectionOutcome::AllRejected => Outcome::AllRejected,
        })
    }

    fn collect_verdict_diagnostics(&mut self) {
        let Some(verdict) = &self.ue.verdict else {
            return;
        };
        let (lo, hi) = self.ue.expected_window.unwrap_or_default();
        let center = 0.5 * (lo + hi);
        let standard = self.ue.standard_precheck.as_deref().unwrap_or_default();
        for (i, c) in self.ue.candidates.iter().enumerate() {
            let ber = verdict.bers[i].or_else(|| crate::phy::ber(&c.demodulated_precheck, standard).ok());
            let offset = Some(c.arrival_time - center);
            match c.true_origin {
                Origin::Legit => {
                    self.diagnostics.legit_ber = ber;
                    self.diagnostics.legit_arrival_offset_s = offset;
                }
                Origin::Fbs => {
                    self.diagnostics.fbs_ber = ber;
                    self.diagnostics.fbs_arrival_offset_s = offset;
                }
            }
        }
    }

    fn handle(&mut self, now: f64, event: Event) -> Result<()> {
        match event {
            Event::Deliver(env) => {
                let env_receiver = env.receiver;
                let result = match env.receiver {
                    NodeId::SourceBs => self.source.step(&env.msg),
                    NodeId::TargetBs => self.target.step(&env.msg, &mut self.rng),
                    NodeId::Ue => {
                        let rx = self.receive(now, env)?;
                        self.ue.step(now, UeInput::Radio(rx), &mut self.rng)
                    }
                    NodeId::Fbs => Ok(Vec::new()),
                };
                match result {
                    Ok(actions) => self.dispatch(env_receiver, now, actions),
                    Err(e) => {
                        log::debug!("dropped message: {e}");
                        self.diagnostics.protocol_errors += 1;
                    }
                }
            }
            Event::UeTimer(timer) => match self.ue.step(now, UeInput::Timer(timer), &mut self.rng) {
                Ok(actions) => self.dispatch(NodeId::Ue, now, actions),
                Err(e) => {
                    log::debug!("UE timer rejected: {e}");
                    self.diagnostics.protocol_errors += 1;
                }
            },
            Event::FbsHears(env) => self.fbs_hears(now, env)?,
            Event::FbsSend(forgery) => {
                if self.fbs.may_transmit() {
                    self.fbs.forged = true;
                    self.diagnostics.fbs_guess = Some(forgery.guess.start);
                    self.send(NodeId::Fbs, NodeId::Ue, now, forgery.msg);
                } else {
                    log::debug!("FBS heard the genuine allocation first; forgery withheld");
                }
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, from: NodeId, now: f64, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Send { to, msg, hold } => self.send(from, to, now + hold, msg),
                Action::Timer { at, timer } => {
                    debug_assert_eq!(from, NodeId::Ue, "only the UE arms timers");
                    self.queue.push(at, Event::UeTimer(timer));
                }
            }
        }
    }

    fn send(&mut self, from: NodeId, to: NodeId, send_time: f64, msg: HandoverMessage) {
        let delay = self.link_delay(from, to);
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry {
                time: send_time,
                sender: from,
                receiver: to,
                kind: msg.kind(),
            });
        }
        let env = Envelope {
            send_time,
            sender: from,
            receiver: to,
            msg,
        };
        if self.fbs_leg.is_some() {
            let overheard = match (&env.sender, &env.msg) {
                (NodeId::Ue, HandoverMessage::SyncRequest { .. }) => Some(self.deployment.ue_to_fbs()),
                (NodeId::TargetBs, HandoverMessage::UlAllocation { .. }) => {
                    Some(self.deployment.target_to_fbs())
                }
                _ => None,
            };
            if let Some(d) = overheard {
                self.queue
                    .push(send_time + propagation_delay(d), Event::FbsHears(env.clone()));
            }
        }
        self.queue.push(send_time + delay, Event::Deliver(env));
    }

    fn link_delay(&self, from: NodeId, to: NodeId) -> f64 {
        use NodeId::*;
        let d = &self.deployment;
        match (from, to) {
            (SourceBs, TargetBs) | (TargetBs, SourceBs) => self.world.cfg.backhaul_delay_s,
            (Ue, SourceBs) | (SourceBs, Ue) => propagation_delay(d.ue_to_source()),
            (Ue, TargetBs) | (TargetBs, Ue) => propagation_delay(d.ue_to_target()),
            (Ue, Fbs) | (Fbs, Ue) => propagation_delay(d.ue_to_fbs()),
            (TargetBs, Fbs) | (Fbs, TargetBs) => propagation_delay(d.target_to_fbs()),
            (SourceBs, Fbs) | (Fbs, SourceBs) => propagation_delay(d.lbs1.distance(&d.fbs)),
            (a, b) => unreachable!("{a} does not transmit to {b}"),
        }
    }

    /// Pass a radio message through the sender's channel to the UE.
    fn receive(&mut self, now: f64, env: Envelope) -> Result<Reception> {
        let leg = match env.sender {
            NodeId::SourceBs => &self.source_leg,
            NodeId::TargetBs => &self.target_leg,
            NodeId::Fbs => self.fbs_leg.as_ref().expect("FBS transmits only when enabled"),
            NodeId::Ue => unreachable!("the UE does not talk to itself"),
        };
        let symbols = match &env.msg {
            HandoverMessage::PrecheckForward { symbols, .. }
            | HandoverMessage::UlAllocation { symbols, .. } => symbols.as_slice(),
            _ => &[],
        };
        let received_symbols = if symbols.is_empty() {
            Vec::new()
        } else {
            send_through(symbols, &leg.channel, &mut self.rng)?
        };
        Ok(Reception {
            rss_dbm: leg.rss_dbm,
            envelope: env,
            arrival_time: now,
            received_symbols,
        })
    }

    fn fbs_hears(&mut self, now: f64, env: Envelope) -> Result<()> {
        match env.msg {
            HandoverMessage::UlAllocation { .. } => self.fbs.heard_legit_allocation = true,
            HandoverMessage::SyncRequest { ue_id } if self.fbs.may_transmit() => {
                let cfg = &self.world.cfg;
                // the FBS knows the protocol timing, so it knows when the UE listens
                let anticipated = env.send_time
                    + 2.0 * propagation_delay(self.deployment.ue_to_target())
                    + cfg.processing_delay_s;
                let true_start = self.target.selection.map_or(0, |s| s.start);
                let forgery = fbs_react(
                    OverheardSync {
                        heard_at: now,
                        sent_at: env.send_time,
                    },
                    ue_id,
                    &self.world.table,
                    cfg.seq_length,
                    &self.world.strategy,
                    self.deployment.ue_to_fbs(),
                    anticipated,
                    true_start,
                    &mut self.rng,
                )?;
                self.queue.push(forgery.send_time, Event::FbsSend(forgery));
            }
            _ => {}
        }
        Ok(())
    }
}
