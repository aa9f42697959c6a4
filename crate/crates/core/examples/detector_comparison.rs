//! Successful cheating rate of each detector against an FBS that matches
//! the target's RSS at the UE.
//!
//!     cargo run --release --example detector_comparison [trials]

use psd_core::detectors::DetectorKind;
use psd_core::harness::{estimate, Execution, ScenarioConfig};

fn main() -> psd_core::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    for kind in DetectorKind::ALL {
        let cfg = ScenarioConfig {
            detector: kind,
            trials,
            ..ScenarioConfig::default()
        };
        let r = estimate(&cfg, Execution::Parallel)?;
        println!(
            "{:<10} scr {:.4} [{:.4}, {:.4}]  all rejected {:.4}",
            kind.name(),
            r.scr,
            r.ci95.0,
            r.ci95.1,
            r.rejection_rate()
        );
    }
    Ok(())
}
