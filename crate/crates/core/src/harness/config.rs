//! Scenario configuration: `key = value` text with `#` comments.
//!
//! Every key has a default; a file only lists what it changes. Times are
//! given in microseconds, powers in dBm, distances in meters. `snr_db = inf`
//! turns noise off on every link.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::adversary::{FbsStrategy, PowerPolicy};
use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, RadioLink};
use crate::phy::Modulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerPolicyName {
    Match,
    Fixed,
    Sweep,
}

impl PowerPolicyName {
    fn name(self) -> &'static str {
        match self {
            PowerPolicyName::Match => "match",
            PowerPolicyName::Fixed => "fixed",
            PowerPolicyName::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub modulation_order: usize,
    pub table_length: usize,
    /// Number of selected symbols `L`.
    pub seq_length: usize,
    pub block_size: usize,
    pub channel_order: usize,
    /// Per-symbol SNR of the legitimate links at the UE.
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub trials: u64,
    pub base_seed: u64,
    pub hysteresis_db: f64,
    pub processing_delay_s: f64,
    pub slack_s: f64,
    pub backhaul_delay_s: f64,
    pub ber_accept_threshold: f64,
    /// Transmit power of both legal base stations plus the shared path-loss model.
    pub lbs_link: RadioLink,
    pub geometry: GeometryConfig,
    pub fbs_enabled: bool,
    pub fbs_power_policy: PowerPolicyName,
    pub fbs_power_dbm: f64,
    pub fbs_max_power_dbm: f64,
    pub fbs_reaction_delay_s: f64,
    pub fbs_aim_window: bool,
    pub fbs_lead_s: f64,
    pub fbs_oracle_start: bool,
    pub distance_threshold_m: f64,
    pub region_alpha: f64,
    /// Honest measurement reports used for the RSS-threshold statistics.
    pub rss_history: usize,
    /// Load the symbol table from a dump instead of generating it.
    pub table_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let fbs = FbsStrategy::default();
        Self {
            modulation_order: 16,
            table_length: 32,
            seq_length: 8,
            block_size: 4,
            channel_order: 2,
            snr_db: 10.0,
            detector: DetectorKind::Psd,
            trials: 10_000,
            base_seed: 1,
            hysteresis_db: 3.0,
            processing_delay_s: 10e-6,
            slack_s: 2e-6,
            backhaul_delay_s: 1e-3,
            ber_accept_threshold: 0.25,
            lbs_link: RadioLink::default(),
            geometry: GeometryConfig::default(),
            fbs_enabled: true,
            fbs_power_policy: PowerPolicyName::Match,
            fbs_power_dbm: 30.0,
            fbs_max_power_dbm: fbs.max_power_dbm,
            fbs_reaction_delay_s: fbs.reaction_delay_s,
            fbs_aim_window: fbs.aim_window,
            fbs_lead_s: fbs.lead_s,
            fbs_oracle_start: fbs.oracle_start,
            distance_threshold_m: 100.0,
            region_alpha: 0.05,
            rss_history: 200,
            table_file: None,
        }
    }
}

// microseconds per second; dividing by it rounds `10` to exactly `1e-5`
const US_PER_S: f64 = 1e6;

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got {value:?}"))),
    }
}

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        // µs values pass through a 1e-6 scale; hide the float dust it leaves
        let rounded: f64 = format!("{x:.12e}").parse().expect("float reparses");
        format!("{rounded}")
    }
}

impl ScenarioConfig {
    /// Every accepted key, in banner order.
    pub const KEYS: &'static [&'static str] = &[
        "modulation_order",
        "table_length",
        "seq_length",
        "block_size",
        "channel_order",
        "snr_db",
        "detector",
        "trials",
        "base_seed",
        "hysteresis_db",
        "processing_delay_us",
        "slack_us",
        "backhaul_delay_us",
        "ber_accept_threshold",
        "lbs.tx_power_dbm",
        "link.path_loss_exponent",
        "link.reference_loss_db",
        "link.shadowing_sigma_db",
        "geometry.cell_radius_m",
        "geometry.fbs_r_min_m",
        "geometry.fbs_r_max_m",
        "geometry.junction_lo",
        "geometry.junction_hi",
        "fbs.enabled",
        "fbs.power_policy",
        "fbs.power_dbm",
        "fbs.max_power_dbm",
        "fbs.reaction_delay_us",
        "fbs.aim_window",
        "fbs.lead_us",
        "fbs.oracle_start",
        "detector.distance_threshold_m",
        "detector.region_alpha",
        "detector.rss_history",
        "table_file",
    ];

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::config(key, "missing value"));
        }
        match key {
            "modulation_order" => self.modulation_order = parse_num(key, value)?,
            "table_length" => self.table_length = parse_num(key, value)?,
            "seq_length" => self.seq_length = parse_num(key, value)?,
            "block_size" => self.block_size = parse_num(key, value)?,
            "channel_order" => self.channel_order = parse_num(key, value)?,
            "snr_db" => self.snr_db = parse_num(key, value)?,
            "detector" => self.detector = value.parse()?,
            "trials" => self.trials = parse_num(key, value)?,
            "base_seed" => self.base_seed = parse_num(key, value)?,
            "hysteresis_db" => self.hysteresis_db = parse_num(key, value)?,
            "processing_delay_us" => self.processing_delay_s = parse_num::<f64>(key, value)? / US_PER_S,
            "slack_us" => self.slack_s = parse_num::<f64>(key, value)? / US_PER_S,
            "backhaul_delay_us" => self.backhaul_delay_s = parse_num::<f64>(key, value)? / US_PER_S,
            "ber_accept_threshold" => self.ber_accept_threshold = parse_num(key, value)?,
            "lbs.tx_power_dbm" => self.lbs_link.tx_power_dbm = parse_num(key, value)?,
            "link.path_loss_exponent" => self.lbs_link.path_loss_exponent = parse_num(key, value)?,
            "link.reference_loss_db" => self.lbs_link.reference_loss_db = parse_num(key, value)?,
            "link.shadowing_sigma_db" => self.lbs_link.shadowing_sigma_db = parse_num(key, value)?,
            "geometry.cell_radius_m" => self.geometry.cell_radius_m = parse_num(key, value)?,
            "geometry.fbs_r_min_m" => self.geometry.fbs_r_min_m = parse_num(key, value)?,
            "geometry.fbs_r_max_m" => self.geometry.fbs_r_max_m = parse_num(key, value)?,
            "geometry.junction_lo" => self.geometry.junction_lo = parse_num(key, value)?,
            "geometry.junction_hi" => self.geometry.junction_hi = parse_num(key, value)?,
            "fbs.enabled" => self.fbs_enabled = parse_bool(key, value)?,
            "fbs.power_policy" => {
                self.fbs_power_policy = match value {
                    "match" => PowerPolicyName::Match,
                    "fixed" => PowerPolicyName::Fixed,
                    "sweep" => PowerPolicyName::Sweep,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("unknown policy {value:?} (match, fixed, sweep)"),
                        ))
                    }
                }
            }
            "fbs.power_dbm" => self.fbs_power_dbm = parse_num(key, value)?,
            "fbs.max_power_dbm" => self.fbs_max_power_dbm = parse_num(key, value)?,
            "fbs.reaction_delay_us" => {
                self.fbs_reaction_delay_s = parse_num::<f64>(key, value)? / US_PER_S
            }
            "fbs.aim_window" => self.fbs_aim_window = parse_bool(key, value)?,
            "fbs.lead_us" => self.fbs_lead_s = parse_num::<f64>(key, value)? / US_PER_S,
            "fbs.oracle_start" => self.fbs_oracle_start = parse_bool(key, value)?,
            "detector.distance_threshold_m" => self.distance_threshold_m = parse_num(key, value)?,
            "detector.region_alpha" => self.region_alpha = parse_num(key, value)?,
            "detector.rss_history" => self.rss_history = parse_num(key, value)?,
            "table_file" => self.table_file = Some(PathBuf::from(value)),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "modulation_order" => self.modulation_order.to_string(),
            "table_length" => self.table_length.to_string(),
            "seq_length" => self.seq_length.to_string(),
            "block_size" => self.block_size.to_string(),
            "channel_order" => self.channel_order.to_string(),
            "snr_db" => fmt_f64(self.snr_db),
            "detector" => self.detector.to_string(),
            "trials" => self.trials.to_string(),
            "base_seed" => self.base_seed.to_string(),
            "hysteresis_db" => fmt_f64(self.hysteresis_db),
            "processing_delay_us" => fmt_f64(self.processing_delay_s * US_PER_S),
            "slack_us" => fmt_f64(self.slack_s * US_PER_S),
            "backhaul_delay_us" => fmt_f64(self.backhaul_delay_s * US_PER_S),
            "ber_accept_threshold" => fmt_f64(self.ber_accept_threshold),
            "lbs.tx_power_dbm" => fmt_f64(self.lbs_link.tx_power_dbm),
            "link.path_loss_exponent" => fmt_f64(self.lbs_link.path_loss_exponent),
            "link.reference_loss_db" => fmt_f64(self.lbs_link.reference_loss_db),
            "link.shadowing_sigma_db" => fmt_f64(self.lbs_link.shadowing_sigma_db),
            "geometry.cell_radius_m" => fmt_f64(self.geometry.cell_radius_m),
            "geometry.fbs_r_min_m" => fmt_f64(self.geometry.fbs_r_min_m),
            "geometry.fbs_r_max_m" => fmt_f64(self.geometry.fbs_r_max_m),
            "geometry.junction_lo" => fmt_f64(self.geometry.junction_lo),
            "geometry.junction_hi" => fmt_f64(self.geometry.junction_hi),
            "fbs.enabled" => self.fbs_enabled.to_string(),
            "fbs.power_policy" => self.fbs_power_policy.name().to_string(),
            "fbs.power_dbm" => fmt_f64(self.fbs_power_dbm),
            "fbs.max_power_dbm" => fmt_f64(self.fbs_max_power_dbm),
            "fbs.reaction_delay_us" => fmt_f64(self.fbs_reaction_delay_s * US_PER_S),
            "fbs.aim_window" => self.fbs_aim_window.to_string(),
            "fbs.lead_us" => fmt_f64(self.fbs_lead_s * US_PER_S),
            "fbs.oracle_start" => self.fbs_oracle_start.to_string(),
            "detector.distance_threshold_m" => fmt_f64(self.distance_threshold_m),
            "detector.region_alpha" => fmt_f64(self.region_alpha),
            "detector.rss_history" => self.rss_history.to_string(),
            "table_file" => self
                .table_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            _ => unreachable!("key list and getter out of sync: {key}"),
        }
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                reason: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file, then apply `overrides` (CLI flags) in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved configuration as `key = value` lines, every key present.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let value = self.get(key);
            if key == &"table_file" && value.is_empty() {
                continue;
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn banner(&self) -> String {
        let mut out = String::from("# resolved config\n");
        for line in self.to_text().lines() {
            let _ = writeln!(out, "#   {line}");
        }
        out
    }

    pub fn modulation(&self) -> Result<Modulation> {
        Modulation::new(self.modulation_order)
    }

    pub fn fbs_strategy(&self) -> FbsStrategy {
        FbsStrategy {
            power_policy: match self.fbs_power_policy {
                PowerPolicyName::Match => PowerPolicy::MatchTargetAtUe,
                PowerPolicyName::Fixed => PowerPolicy::FixedDbm(self.fbs_power_dbm),
                PowerPolicyName::Sweep => PowerPolicy::SweepPoint(self.fbs_power_dbm),
            },
            reaction_delay_s: self.fbs_reaction_delay_s,
            aim_window: self.fbs_aim_window,
            lead_s: self.fbs_lead_s,
            max_power_dbm: self.fbs_max_power_dbm,
            oracle_start: self.fbs_oracle_start,
            ..FbsStrategy::default()
        }
    }

    /// Transmit power reported in results, `None` when it depends on geometry.
    pub fn reported_fbs_power(&self) -> Option<f64> {
        match self.fbs_power_policy {
            PowerPolicyName::Match => None,
            PowerPolicyName::Fixed | PowerPolicyName::Sweep => Some(self.fbs_power_dbm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.modulation()?;
        if self.table_length < 2 {
            return Err(Error::config("table_length", "must be at least 2"));
        }
        if self.seq_length == 0 || self.seq_length > self.table_length {
            return Err(Error::config(
                "seq_length",
                format!(
                    "sequence length {} outside [1, table_length = {}]",
                    self.seq_length, self.table_length
                ),
            ));
        }
        if self.block_size == 0 {
            return Err(Error::config("block_size", "must be at least 1"));
        }
        if !self.seq_length.is_multiple_of(self.block_size) {
            return Err(Error::config(
                "seq_length",
                format!(
                    "{} selected symbols do not fill whole blocks of {}",
                    self.seq_length, self.block_size
                ),
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::config("snr_db", "must be a number or inf"));
        }
        for (key, v) in [
            ("processing_delay_us", self.processing_delay_s),
            ("slack_us", self.slack_s),
            ("backhaul_delay_us", self.backhaul_delay_s),
            ("hysteresis_db", self.hysteresis_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.ber_accept_threshold) {
            return Err(Error::config("ber_accept_threshold", "must lie in [0, 1]"));
        }
        self.lbs_link.validate()?;
        self.geometry.validate()?;
        self.fbs_strategy().validate()?;
        if !(self.distance_threshold_m > 0.0) {
            return Err(Error::config("detector.distance_threshold_m", "must be positive"));
        }
        if !(self.region_alpha > 0.0 && self.region_alpha < 1.0) {
            return Err(Error::config("detector.region_alpha", "must lie in (0, 1)"));
        }
        if self.rss_history < 2 {
            return Err(Error::config("detector.rss_history", "need at least 2 samples"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values_are_valid() {
        let cfg = ScenarioConfig::from_text("table_length=32\nseq_length=8\n").unwrap();
        assert_eq!(cfg.table_length, 32);
        assert_eq!(cfg.seq_length, 8);
        assert_eq!(cfg.block_size, 4);
        assert_eq!(cfg.channel_order, 2);
    }

    #[test]
    fn sequence_longer_than_table_is_rejected() {
        let err = ScenarioConfig::from_text("table_length = 32\nseq_length = 40\n").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "seq_length"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_block_is_rejected() {
        assert!(ScenarioConfig::from_text("seq_length = 6").is_err());
    }

    #[test]
    fn cli_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.cfg");
        std::fs::write(&path, "# baseline setup\ntrials = 10000\nsnr_db = 12 # dB\n").unwrap();
        let cfg = ScenarioConfig::load(
            Some(&path),
            &[("trials".to_string(), "100".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.snr_db, 12.0);
    }

    #[test]
    fn unknown_and_malformed_keys() {
        match ScenarioConfig::from_text("tabel_length = 32").unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "tabel_length"),
            other => panic!("{other:?}"),
        }
        match ScenarioConfig::from_text("trials = many").unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "trials"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ScenarioConfig::from_text("just words").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        match ScenarioConfig::from_text("snr_db =").unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "snr_db"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ScenarioConfig::load(Some(Path::new("/nonexistent/x.cfg")), &[]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/x.cfg"));
    }

    #[test]
    fn resolved_text_roundtrips() {
        let mut cfg = ScenarioConfig::default();
        cfg.set("snr_db", "inf").unwrap();
        cfg.set("fbs.power_policy", "sweep").unwrap();
        cfg.set("fbs.power_dbm", "25").unwrap();
        cfg.set("slack_us", "3.5").unwrap();
        cfg.set("detector", "region").unwrap();
        let back = ScenarioConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.to_text().lines().count(), ScenarioConfig::KEYS.len() - 1);
        assert!(cfg.banner().starts_with("# resolved config"));
    }

    #[test]
    fn strategy_from_keys() {
        let cfg = ScenarioConfig::from_text(
            "fbs.power_policy = fixed\nfbs.power_dbm = 30\nfbs.reaction_delay_us = 7\nfbs.oracle_start = true",
        )
        .unwrap();
        let s = cfg.fbs_strategy();
        assert_eq!(s.power_policy, PowerPolicy::FixedDbm(30.0));
        assert!((s.reaction_delay_s - 7e-6).abs() < 1e-18);
        assert!(s.oracle_start);
        assert_eq!(cfg.reported_fbs_power(), Some(30.0));
        assert_eq!(ScenarioConfig::default().reported_fbs_power(), None);
    }
}
