//! 16-QAM bit error rate over AWGN, next to the textbook Gray-coded curve.
//!
//!     cargo run --release --example qam_ber_curve

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use psd_core::phy::{demodulate, modulate, send_through, ChannelModel, Modulation};

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn main() -> psd_core::Result<()> {
    let m = Modulation::qam16();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("ebn0_db,ber,theory");
    for ebn0_db in (0..=12).step_by(2) {
        let n0 = 0.25 / 10f64.powf(ebn0_db as f64 / 10.0);
        let channel = ChannelModel::identity(0, 4, n0 / 2.0)?;
        let bits: Vec<bool> = (0..400_000).map(|_| rng.random()).collect();
        let rx = send_through(&modulate(&bits, &m)?, &channel, &mut rng)?;
        let errors = demodulate(&rx, &m).iter().zip(&bits).filter(|(a, b)| a != b).count();

        let r = (1.0 / 10f64.sqrt()) / (n0 / 2.0).sqrt();
        let theory = (3.0 * q(r) + 2.0 * q(3.0 * r) - q(5.0 * r)) / 4.0;
        println!("{ebn0_db},{:.4e},{theory:.4e}", errors as f64 / bits.len() as f64);
    }
    Ok(())
}
