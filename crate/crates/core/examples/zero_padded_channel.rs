//! Push one zero-padded block through a random multipath channel and undo it
//! with the zero-forcing equalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psd_core::phy::{
    demodulate, equalize, into_blocks, modulate, noise_variance_for_snr, transmit_block, ChannelModel,
    Modulation,
};

fn main() -> psd_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = Modulation::qam16();
    let taps = ChannelModel::random_taps(2, &mut rng);
    println!("taps: {taps:.3?}");

    let bits: Vec<bool> = (0..32).map(|i| (i * 7) % 3 == 0).collect();
    let blocks = into_blocks(&modulate(&bits, &m)?, 4)?;

    for snr_db in [f64::INFINITY, 20.0, 5.0] {
        let channel = ChannelModel::new(taps.clone(), 2, 4, noise_variance_for_snr(snr_db))?;
        let mut received = Vec::new();
        for block in &blocks {
            let observed = transmit_block(block, &channel, &mut rng)?;
            assert_eq!(observed.symbols.len(), channel.conv_length());
            received.extend(equalize(&observed, &channel)?.symbols);
        }
        let wrong = demodulate(&received, &m).iter().zip(&bits).filter(|(a, b)| a != b).count();
        println!("snr {snr_db:>4} dB: {wrong}/{} bits wrong", bits.len());
    }

    let channel = ChannelModel::new(taps, 2, 4, 0.0)?;
    println!("toeplitz (6 x 4):\n{:.3}", channel.toeplitz());
    Ok(())
}
