//! Deployment of the two legal base stations, the UE and the false base
//! station, plus log-distance path loss and propagation delay.
//!
//! Coordinates are meters. LBS₁ (source) sits at the origin and LBS₂ (target)
//! at `(2R, 0)`, so the two cells of radius `R` touch at `(R, 0)`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Reference distance of the path-loss model.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub cell_radius_m: f64,
    pub fbs_r_min_m: f64,
    pub fbs_r_max_m: f64,
    /// UE distances to both LBSs lie in `[junction_lo, junction_hi] · R`.
    pub junction_lo: f64,
    pub junction_hi: f64,
    /// Lower bound on `d(UE, LBS₁) / d(UE, LBS₂)`: the UE sits on the target side.
    pub min_distance_ratio: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            cell_radius_m: 500.0,
            fbs_r_min_m: 50.0,
            fbs_r_max_m: 200.0,
            junction_lo: 0.8,
            junction_hi: 1.2,
            min_distance_ratio: 1.0,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_radius_m > 0.0 && self.cell_radius_m.is_finite()) {
            return Err(Error::config("geometry.cell_radius_m", "must be positive"));
        }
        if !(self.fbs_r_min_m >= 0.0 && self.fbs_r_min_m < self.fbs_r_max_m) {
            return Err(Error::config(
                "geometry.fbs_r_min_m",
                format!(
                    "annulus ({}, {}) must satisfy 0 <= r_min < r_max",
                    self.fbs_r_min_m, self.fbs_r_max_m
                ),
            ));
        }
        if !(self.junction_lo > 0.0 && self.junction_lo <= self.junction_hi) {
            return Err(Error::config(
                "geometry.junction_lo",
                "junction band must satisfy 0 < lo <= hi",
            ));
        }
        if !(self.min_distance_ratio > 0.0) {
            return Err(Error::config(
                "geometry.min_distance_ratio",
                "must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub lbs1: Point,
    pub lbs2: Point,
    pub ue: Point,
    pub fbs: Point,
    pub cell_radius_m: f64,
    pub fbs_annulus: (f64, f64),
}

impl Deployment {
    pub fn ue_to_source(&self) -> f64 {
        self.ue.distance(&self.lbs1)
    }

    pub fn ue_to_target(&self) -> f64 {
        self.ue.distance(&self.lbs2)
    }

    pub fn ue_to_fbs(&self) -> f64 {
        self.ue.distance(&self.fbs)
    }

    pub fn target_to_fbs(&self) -> f64 {
        self.lbs2.distance(&self.fbs)
    }
}

/// Place the UE in the junction band and the FBS area-uniformly in the
/// annulus around it.
pub fn sample_deployment<R: Rng + ?Sized>(cfg: &GeometryConfig, rng: &mut R) -> Result<Deployment> {
    cfg.validate()?;
    let r = cfg.cell_radius_m;
    let lbs1 = Point::new(0.0, 0.0);
    let lbs2 = Point::new(2.0 * r, 0.0);
    let (lo, hi) = (cfg.junction_lo * r, cfg.junction_hi * r);

    let mut ue = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let p = Point::new(
            rng.random_range((2.0 * r - hi)..=hi),
            rng.random_range(-hi..=hi),
        );
        let (d1, d2) = (p.distance(&lbs1), p.distance(&lbs2));
        if (lo..=hi).contains(&d1) && (lo..=hi).contains(&d2) && d1 >= cfg.min_distance_ratio * d2
        {
            ue = Some(p);
            break;
        }
    }
    let ue = ue.ok_or_else(|| {
        Error::config(
            "geometry.junction_lo",
            "junction band admits no UE position on the target side",
        )
    })?;

    let (r_min, r_max) = (cfg.fbs_r_min_m, cfg.fbs_r_max_m);
    let radius = rng
        .random_range((r_min * r_min)..=(r_max * r_max))
        .sqrt()
        .clamp(r_min, r_max);
    let angle = rng.random_range(0.0..TAU);
    let fbs = Point::new(ue.x + radius * angle.cos(), ue.y + radius * angle.sin());

    Ok(Deployment {
        lbs1,
        lbs2,
        ue,
        fbs,
        cell_radius_m: r,
        fbs_annulus: (r_min, r_max),
    })
}

/// Log-distance path loss with optional log-normal shadowing, seen from one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioLink {
    pub tx_power_dbm: f64,
    pub path_loss_exponent: f64,
    /// Loss at the 1 m reference distance, dB.
    pub reference_loss_db: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for RadioLink {
    fn default() -> Self {
        Self {
            tx_power_dbm: 46.0,
            path_loss_exponent: 3.5,
            reference_loss_db: 30.0,
            shadowing_sigma_db: 0.0,
        }
    }
}

impl RadioLink {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent > 0.0) {
            return Err(Error::config(
                "link.path_loss_exponent",
                "must be positive",
            ));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::config(
                "link.shadowing_sigma_db",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn with_tx_power(&self, tx_power_dbm: f64) -> Self {
        Self {
            tx_power_dbm,
            ..*self
        }
    }

    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        let d = clamp_distance(distance_m);
        self.reference_loss_db + 10.0 * self.path_loss_exponent * (d / REFERENCE_DISTANCE_M).log10()
    }

    /// RSS without shadowing.
    pub fn mean_rss_dbm(&self, distance_m: f64) -> f64 {
        self.tx_power_dbm - self.path_loss_db(distance_m)
    }

    /// Invert the mean path-loss model. `None` if the RSS is above what the
    /// reference distance can produce.
    pub fn distance_for_rss(&self, rss_dbm: f64) -> Option<f64> {
        let excess = self.tx_power_dbm - self.reference_loss_db - rss_dbm;
        if excess < 0.0 {
            return None;
        }
        Some(REFERENCE_DISTANCE_M * 10f64.powf(excess / (10.0 * self.path_loss_exponent)))
    }

    /// Transmit power that yields a mean RSS of `rss_dbm` at `distance_m`.
    pub fn tx_power_for_rss(&self, rss_dbm: f64, distance_m: f64) -> f64 {
        rss_dbm + self.path_loss_db(distance_m)
    }
}

fn clamp_distance(distance_m: f64) -> f64 {
    if distance_m < REFERENCE_DISTANCE_M {
        log::warn!("distance {distance_m} m below reference distance, clamped");
        REFERENCE_DISTANCE_M
    } else {
        distance_m
    }
}

/// Received power with a fresh shadowing draw.
pub fn rss_dbm<R: Rng + ?Sized>(link: &RadioLink, distance_m: f64, rng: &mut R) -> f64 {
    let shadow = if link.shadowing_sigma_db > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        z * link.shadowing_sigma_db
    } else {
        0.0
    };
    link.mean_rss_dbm(distance_m) + shadow
}

pub fn propagation_delay(distance_m: f64) -> f64 {
    distance_m / SPEED_OF_LIGHT
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn annulus_bounds_and_junction_band() {
        let cfg = GeometryConfig {
            min_distance_ratio: 1.2,
            ..GeometryConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let d = sample_deployment(&cfg, &mut rng).unwrap();
            let r = d.ue_to_fbs();
            assert!((50.0 - 1e-9..=200.0 + 1e-9).contains(&r), "{r}");
            assert!((400.0..=600.0).contains(&d.ue_to_source()));
            assert!((400.0..=600.0).contains(&d.ue_to_target()));
            assert!(d.ue_to_source() >= 1.2 * d.ue_to_target());
        }
    }

    #[test]
    fn fbs_angle_is_uniform() {
        let cfg = GeometryConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let bins = 16;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let d = sample_deployment(&cfg, &mut rng).unwrap();
            let a = (d.fbs.y - d.ue.y).atan2(d.fbs.x - d.ue.x).rem_euclid(TAU);
            counts[((a / TAU) * bins as f64) as usize % bins] += 1;
        }
        let p = 1.0 / bins as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn fbs_radius_is_area_uniform() {
        // P(r <= r_mid) with r_mid^2 halfway between r_min^2 and r_max^2 is 1/2
        let cfg = GeometryConfig::default();
        let r_mid = ((50f64.powi(2) + 200f64.powi(2)) / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let n = 50_000;
        let inner = (0..n)
            .filter(|_| sample_deployment(&cfg, &mut rng).unwrap().ue_to_fbs() <= r_mid)
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((inner as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn deployment_is_seed_deterministic() {
        let cfg = GeometryConfig::default();
        let a = sample_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_annulus_rejected() {
        let cfg = GeometryConfig {
            fbs_r_min_m: 200.0,
            fbs_r_max_m: 50.0,
            ..GeometryConfig::default()
        };
        let err = sample_deployment(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn rss_at_reference_distance() {
        let link = RadioLink::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rss_dbm(&link, 1.0, &mut rng), 46.0 - 30.0);
        // below the reference distance is clamped
        assert_eq!(rss_dbm(&link, 0.25, &mut rng), 46.0 - 30.0);
    }

    #[test]
    fn doubling_distance_costs_ten_and_a_half_db() {
        let link = RadioLink::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let drop = rss_dbm(&link, 100.0, &mut rng) - rss_dbm(&link, 200.0, &mut rng);
        assert!((drop - 35.0 * 2f64.log10()).abs() < 1e-12);
        assert!((drop - 10.54).abs() < 0.01);
    }

    #[test]
    fn shadowing_std_matches_sigma() {
        let link = RadioLink {
            shadowing_sigma_db: 2.0,
            ..RadioLink::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rss_dbm(&link, 300.0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() / 2.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn rss_monotone_without_shadowing() {
        let link = RadioLink::default();
        let mut prev = f64::INFINITY;
        for d in (1..2000).map(|k| k as f64) {
            let r = link.mean_rss_dbm(d);
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn path_loss_inversion() {
        let link = RadioLink::default();
        for d in [1.0, 37.0, 500.0, 1234.5] {
            let back = link.distance_for_rss(link.mean_rss_dbm(d)).unwrap();
            assert!((back - d).abs() / d < 1e-12);
        }
        assert!(link.distance_for_rss(20.0).is_none());
        let p = link.tx_power_for_rss(-80.0, 150.0);
        assert!((link.with_tx_power(p).mean_rss_dbm(150.0) + 80.0).abs() < 1e-12);
    }

    #[test]
    fn delays() {
        assert_eq!(propagation_delay(0.0), 0.0);
        assert!((propagation_delay(299.8) - 1e-6).abs() < 1e-18);
        assert!(propagation_delay(10.0) < propagation_delay(10.5));
        for a in [0.5, 2.0, 7.0] {
            let d = 123.0;
            assert!((propagation_delay(a * d) - a * propagation_delay(d)).abs() < 1e-18);
        }
    }
}
