//! How the cheating rate moves with FBS transmit power, for the precheck
//! detector and the RSS threshold baseline, at two link SNRs.

use psd_core::detectors::DetectorKind;
use psd_core::harness::{run_sweep, Axis, Execution, ScenarioConfig};

fn main() -> psd_core::Result<()> {
    let powers: Vec<f64> = (0..=6).map(|i| 10.0 + 5.0 * i as f64).collect();
    for detector in [DetectorKind::Psd, DetectorKind::Rss3Sigma] {
        for snr_db in [10.0, 30.0] {
            let cfg = ScenarioConfig {
                detector,
                snr_db,
                trials: 10_000,
                ..ScenarioConfig::default()
            };
            let scr: Vec<String> = run_sweep(&cfg, Axis::FbsPower, &powers, Execution::Parallel)?
                .iter()
                .map(|r| format!("{:.4}", r.scr))
                .collect();
            println!("{detector:<9} snr {snr_db:>2} dB: {}", scr.join(" "));
        }
    }
    println!("powers (dBm): {powers:?}");
    Ok(())
}
