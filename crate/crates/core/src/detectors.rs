//! Detection schemes. Each consumes the candidate UL allocations the UE
//! collected and returns per-candidate legality plus the UE's choice.
//!
//! - [`psd_detect`]: arrival-window check, then the candidate whose precheck
//!   bits are closest (lowest BER) to the standard precheck sequence.
//! - [`rss_threshold_detect`]: illegal if RSS exceeds the history mean by more
//!   than three standard deviations.
//! - [`distance_threshold_detect`]: invert the path-loss model and compare the
//!   implied distance with the known UE–target distance.
//! - [`suspicious_region_detect`]: illegal if RSS leaves the two-sided
//!   `1 - alpha` shadowing region around the expected RSS.
//!
//! The three RSS-based schemes connect to the strongest legal candidate.
//! Candidates within [`RSS_TIE_DB`] of each other count as equally strong; the
//! earliest arrival among them wins, and a fair draw settles exact ties.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::RadioLink;
use crate::phy::ber;
use crate::protocol::NodeId;

pub const RSS_TIE_DB: f64 = 1e-9;

/// Degenerate suspicious-region half-width used when shadowing is off.
pub const DEGENERATE_REGION_DB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Legit,
    Fbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSignal {
    pub demodulated_precheck: Vec<bool>,
    pub arrival_time: f64,
    pub rss_dbm: f64,
    pub claimed_sender: NodeId,
    /// Ground truth for scoring only. Detectors never read it.
    pub true_origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionOutcome {
    LegitChosen,
    FbsChosen,
    AllRejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub legal: Vec<bool>,
    pub chosen: Option<usize>,
    pub outcome: DetectionOutcome,
    /// BER against the standard precheck, where the scheme computed one.
    pub bers: Vec<Option<f64>>,
}

impl Verdict {
    fn new(candidates: &[CandidateSignal], legal: Vec<bool>, chosen: Option<usize>) -> Self {
        let outcome = match chosen.map(|i| candidates[i].true_origin) {
            Some(Origin::Legit) => DetectionOutcome::LegitChosen,
            Some(Origin::Fbs) => DetectionOutcome::FbsChosen,
            None => DetectionOutcome::AllRejected,
        };
        Self {
            bers: vec![None; candidates.len()],
            legal,
            chosen,
            outcome,
        }
    }
}

fn pick_uniform<R: Rng + ?Sized>(tied: &[usize], rng: &mut R) -> usize {
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// Precheck-sequence detection.
pub fn psd_detect<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    standard_precheck: &[bool],
    window: (f64, f64),
    ber_accept_threshold: f64,
    rng: &mut R,
) -> Result<Verdict> {
    if standard_precheck.is_empty() {
        return Err(Error::Comparison("empty standard precheck".into()));
    }
    let (t_lo, t_hi) = window;
    let mut bers = vec![None; candidates.len()];
    let mut in_window = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if (t_lo..=t_hi).contains(&c.arrival_time) {
            bers[i] = Some(ber(&c.demodulated_precheck, standard_precheck)?);
            in_window.push(i);
        }
    }

    let chosen = match in_window.as_slice() {
        [] => None,
        [only] => (bers[*only].unwrap() <= ber_accept_threshold).then_some(*only),
        many => {
            let best = many
                .iter()
                .map(|&i| bers[i].unwrap())
                .fold(f64::INFINITY, f64::min);
            let tied: Vec<usize> = many
                .iter()
                .copied()
                .filter(|&i| bers[i].unwrap() == best)
                .collect();
            Some(pick_uniform(&tied, rng))
        }
    };

    let legal = (0..candidates.len()).map(|i| Some(i) == chosen).collect();
    let mut v = Verdict::new(candidates, legal, chosen);
    v.bers = bers;
    Ok(v)
}

/// Strongest legal candidate; near-equal RSS goes to the earliest arrival.
fn choose_strongest<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    legal: &[bool],
    rng: &mut R,
) -> Option<usize> {
    let pool: Vec<usize> = (0..candidates.len()).filter(|&i| legal[i]).collect();
    let strongest = pool
        .iter()
        .map(|&i| candidates[i].rss_dbm)
        .fold(f64::NEG_INFINITY, f64::max);
    let strong: Vec<usize> = pool
        .into_iter()
        .filter(|&i| candidates[i].rss_dbm >= strongest - RSS_TIE_DB)
        .collect();
    let earliest = strong
        .iter()
        .map(|&i| candidates[i].arrival_time)
        .fold(f64::INFINITY, f64::min);
    let first: Vec<usize> = strong
        .into_iter()
        .filter(|&i| candidates[i].arrival_time == earliest)
        .collect();
    if first.is_empty() {
        None
    } else {
        Some(pick_uniform(&first, rng))
    }
}

fn rss_based<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    is_legal: impl Fn(&CandidateSignal) -> bool,
    rng: &mut R,
) -> Verdict {
    let legal: Vec<bool> = candidates.iter().map(is_legal).collect();
    let chosen = choose_strongest(candidates, &legal, rng);
    Verdict::new(candidates, legal, chosen)
}

/// Mean + 3σ threshold over an RSS history.
pub fn rss_threshold_detect<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    history_mean_dbm: f64,
    history_std_db: f64,
    rng: &mut R,
) -> Result<Verdict> {
    if !(history_std_db > 0.0) {
        return Err(Error::config(
            "detector.rss_history",
            format!("RSS history std {history_std_db} must be positive"),
        ));
    }
    let limit = history_mean_dbm + 3.0 * history_std_db;
    Ok(rss_based(candidates, |c| c.rss_dbm <= limit, rng))
}

/// Path-loss distance estimate against the known UE–target distance.
///
/// `claimed_link` carries the claimed sender's published transmit power and
/// the propagation model.
pub fn distance_threshold_detect<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    claimed_link: &RadioLink,
    known_distance_m: f64,
    d_threshold_m: f64,
    rng: &mut R,
) -> Result<Verdict> {
    if !(d_threshold_m > 0.0) {
        return Err(Error::config(
            "detector.distance_threshold_m",
            "must be positive",
        ));
    }
    Ok(rss_based(
        candidates,
        |c| match claimed_link.distance_for_rss(c.rss_dbm) {
            Some(d) => (d - known_distance_m).abs() <= d_threshold_m,
            None => false,
        },
        rng,
    ))
}

/// Half-width of the two-sided `1 - alpha` region for Gaussian shadowing.
pub fn suspicious_region_half_width(sigma_db: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(
            "detector.region_alpha",
            format!("alpha {alpha} outside (0, 1)"),
        ));
    }
    if sigma_db <= 0.0 {
        return Ok(DEGENERATE_REGION_DB);
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    Ok(z * sigma_db)
}

/// RSS must stay within the shadowing region around `expected_rss_dbm`.
pub fn suspicious_region_detect<R: Rng + ?Sized>(
    candidates: &[CandidateSignal],
    expected_rss_dbm: f64,
    shadowing_sigma_db: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<Verdict> {
    let half = suspicious_region_half_width(shadowing_sigma_db, alpha)?;
    Ok(rss_based(
        candidates,
        |c| (c.rss_dbm - expected_rss_dbm).abs() <= half,
        rng,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Psd,
    Rss3Sigma,
    Distance,
    Region,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Psd,
        DetectorKind::Rss3Sigma,
        DetectorKind::Distance,
        DetectorKind::Region,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Psd => "psd",
            DetectorKind::Rss3Sigma => "rss3sigma",
            DetectorKind::Distance => "distance",
            DetectorKind::Region => "region",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "detector",
                    format!("unknown detector {s:?} (psd, rss3sigma, distance, region)"),
                )
            })
    }
}

/// Everything the UE needs to run the configured scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    pub kind: DetectorKind,
    pub ber_accept_threshold: f64,
    pub rss_history_mean_dbm: f64,
    pub rss_history_std_db: f64,
    /// Published parameters of the BS the candidates claim to be.
    pub claimed_link: RadioLink,
    pub target_distance_m: f64,
    pub distance_threshold_m: f64,
    pub region_alpha: f64,
}

impl DecisionContext {
    pub fn psd(ber_accept_threshold: f64) -> Self {
        Self {
            kind: DetectorKind::Psd,
            ber_accept_threshold,
            rss_history_mean_dbm: -80.0,
            rss_history_std_db: 1.0,
            claimed_link: RadioLink::default(),
            target_distance_m: 500.0,
            distance_threshold_m: 100.0,
            region_alpha: 0.05,
        }
    }

    pub fn with_kind(self, kind: DetectorKind) -> Self {
        Self { kind, ..self }
    }

    pub fn decide<R: Rng + ?Sized>(
        &self,
        candidates: &[CandidateSignal],
        standard_precheck: &[bool],
        window: (f64, f64),
        rng: &mut R,
    ) -> Result<Verdict> {
        match self.kind {
            DetectorKind::Psd => psd_detect(
                candidates,
                standard_precheck,
                window,
                self.ber_accept_threshold,
                rng,
            ),
            DetectorKind::Rss3Sigma => rss_threshold_detect(
                candidates,
                self.rss_history_mean_dbm,
                self.rss_history_std_db,
                rng,
            ),
            DetectorKind::Distance => distance_threshold_detect(
                candidates,
                &self.claimed_link,
                self.target_distance_m,
                self.distance_threshold_m,
                rng,
            ),
            DetectorKind::Region => suspicious_region_detect(
                candidates,
                self.claimed_link.mean_rss_dbm(self.target_distance_m),
                self.claimed_link.shadowing_sigma_db,
                self.region_alpha,
                rng,
            ),
        }
    }
}
