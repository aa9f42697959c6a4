//! SCR estimation over many trials, parameter sweeps, and the CSV they feed.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::harness::config::{PowerPolicyName, ScenarioConfig};
use crate::harness::engine::{run_trial, Outcome, World};

pub const CSV_HEADER: &str = "scheme,table_len,seq_len,snr_db,fbs_power_dbm,trials,scr,ci95_lo,ci95_hi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Snr,
    FbsPower,
    TableLength,
    SeqLength,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Snr, Axis::FbsPower, Axis::TableLength, Axis::SeqLength];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Snr => "snr",
            Axis::FbsPower => "fbs_power",
            Axis::TableLength => "table_length",
            Axis::SeqLength => "seq_length",
        }
    }

    /// Put `value` on this axis of `cfg`. A power sweep switches the FBS to
    /// the sweep policy.
    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) -> Result<()> {
        let as_count = |key: &str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(key, format!("{value} is not a whole number")))
            }
        };
        match self {
            Axis::Snr => cfg.snr_db = value,
            Axis::FbsPower => {
                cfg.fbs_power_policy = PowerPolicyName::Sweep;
                cfg.fbs_power_dbm = value;
            }
            Axis::TableLength => cfg.table_length = as_count("table_length")?,
            Axis::SeqLength => cfg.seq_length = as_count("seq_length")?,
        }
        cfg.validate()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("axis", format!("unknown axis {s:?}, expected snr|fbs_power|table_length|seq_length")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Outcome counts over a batch of trials. Merging is associative and
/// commutative, so batches can be combined in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub trials: u64,
    /// FBS chosen: the attack worked.
    pub successes: u64,
    /// Legit BS chosen, or no handover happened.
    pub failures: u64,
    /// Every candidate rejected.
    pub rejections: u64,
    /// Trials that ended in a protocol error or deadlock.
    pub errors: u64,
}

impl Tally {
    pub fn record(&mut self, outcome: Option<Outcome>) {
        self.trials += 1;
        match outcome {
            Some(Outcome::FbsChosen) => self.successes += 1,
            Some(Outcome::LegitChosen | Outcome::NoHandover) => self.failures += 1,
            Some(Outcome::AllRejected) => self.rejections += 1,
            None => self.errors += 1,
        }
    }

    pub fn merge(self, other: Tally) -> Tally {
        Tally {
            trials: self.trials + other.trials,
            successes: self.successes + other.successes,
            failures: self.failures + other.failures,
            rejections: self.rejections + other.rejections,
            errors: self.errors + other.errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScrEstimate {
    pub scheme: String,
    pub table_len: usize,
    pub seq_len: usize,
    pub snr_db: f64,
    /// `None` when the FBS matches the target's RSS, so its power varies per trial.
    pub fbs_power_dbm: Option<f64>,
    pub tally: Tally,
    pub scr: f64,
    pub ci95: (f64, f64),
}

impl ScrEstimate {
    fn from_tally(cfg: &ScenarioConfig, tally: Tally) -> Self {
        let scr = tally.successes as f64 / tally.trials as f64;
        Self {
            scheme: cfg.detector.name().to_string(),
            table_len: cfg.table_length,
            seq_len: cfg.seq_length,
            snr_db: cfg.snr_db,
            fbs_power_dbm: cfg.reported_fbs_power(),
            tally,
            scr,
            ci95: proportion_ci(tally.successes, tally.trials, 0.95),
        }
    }

    /// Fraction of trials in which every candidate was rejected.
    pub fn rejection_rate(&self) -> f64 {
        self.tally.rejections as f64 / self.tally.trials as f64
    }
}

/// Normal-approximation confidence interval for a binomial proportion,
/// clamped to `[0, 1]`.
pub fn proportion_ci(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = z * (p * (1.0 - p) / trials as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Run `cfg.trials` trials and estimate the successful cheating rate.
pub fn estimate(cfg: &ScenarioConfig, execution: Execution) -> Result<ScrEstimate> {
    let world = World::new(cfg.clone())?;
    let run = |i: u64| {
        let mut t = Tally::default();
        match run_trial(&world, i) {
            Ok(o) => t.record(Some(o.outcome)),
            Err(e) => {
                log::warn!("trial {i}: {e}");
                t.record(None);
            }
        }
        t
    };
    let tally = match execution {
        Execution::Serial => (0..cfg.trials).map(run).fold(Tally::default(), Tally::merge),
        Execution::Parallel => (0..cfg.trials)
            .into_par_iter()
            .map(run)
            .reduce(Tally::default, Tally::merge),
    };
    Ok(ScrEstimate::from_tally(cfg, tally))
}

/// One estimate per valid value, in ascending order of `values`. Values the
/// scenario rejects are skipped with a warning.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    axis: Axis,
    values: &[f64],
    execution: Execution,
) -> Result<Vec<ScrEstimate>> {
    if values.is_empty() {
        return Err(Error::config("values", "a sweep needs at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let mut out = Vec::with_capacity(sorted.len());
    for v in sorted {
        let mut point = cfg.clone();
        if let Err(e) = axis.apply(&mut point, v) {
            log::warn!("skipping {axis} = {v}: {e}");
            continue;
        }
        out.push(estimate(&point, execution)?);
    }
    Ok(out)
}

/// Format a real with six significant digits, the way C's `%g` does.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = format!("{x:.5e}");
    let (mantissa, e) = exp.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    if (-4..6).contains(&e) {
        let decimals = (5 - e) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if e < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), e.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn to_csv(results: &[ScrEstimate]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let power = r.fbs_power_dbm.map_or_else(|| "match".to_string(), format_g6);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.table_len,
            r.seq_len,
            format_g6(r.snr_db),
            power,
            r.tally.trials,
            format_g6(r.scr),
            format_g6(r.ci95.0),
            format_g6(r.ci95.1),
        ));
    }
    out
}

pub fn write_csv(results: &[ScrEstimate], path: &Path) -> Result<()> {
    if results.is_empty() {
        return Err(Error::config("results", "nothing to write"));
    }
    fs::write(path, to_csv(results)).map_err(|e| Error::io(path, e))
}
