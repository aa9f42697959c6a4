//! Sample where the UE and the false base station end up, and the RSS the
//! UE sees from each transmitter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psd_core::adversary::{fbs_power_at_ue, FbsStrategy, PowerPolicy};
use psd_core::geometry::{sample_deployment, GeometryConfig, RadioLink};

fn main() -> psd_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let geometry = GeometryConfig::default();
    let link = RadioLink::default();
    let strategy = FbsStrategy {
        power_policy: PowerPolicy::MatchTargetAtUe,
        ..FbsStrategy::default()
    };

    println!("ue_x,ue_y,d_source,d_target,d_fbs,rss_source,rss_target,fbs_power,rss_fbs");
    for _ in 0..8 {
        let d = sample_deployment(&geometry, &mut rng)?;
        let power = fbs_power_at_ue(&strategy, &d, &link);
        let fbs_link = link.with_tx_power(power.tx_power_dbm);
        println!(
            "{:.1},{:.1},{:.1},{:.1},{:.1},{:.2},{:.2},{:.2},{:.2}",
            d.ue.x,
            d.ue.y,
            d.ue_to_source(),
            d.ue_to_target(),
            d.ue_to_fbs(),
            link.mean_rss_dbm(d.ue_to_source()),
            link.mean_rss_dbm(d.ue_to_target()),
            power.tx_power_dbm,
            fbs_link.mean_rss_dbm(d.ue_to_fbs()),
        );
    }
    Ok(())
}
