use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psd_core::harness::sweep::proportion_ci;
use psd_core::harness::{run_trial, Outcome, ScenarioConfig, World};
use psd_core::phy::{demodulate, modulate, Modulation};
use psd_core::seqtable::{generate_table, select_precheck, PrecheckSelection};

proptest! {
    #[test]
    fn modulation_roundtrips(order_log in prop::sample::select(vec![2u32, 4, 6]), bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let m = Modulation::new(1 << order_log).unwrap();
        let k = m.bits_per_symbol();
        let mut bits: Vec<bool> = bytes.iter().flat_map(|b| (0..8).map(move |i| b >> i & 1 == 1)).collect();
        bits.truncate(bits.len() / k * k);
        prop_assert_eq!(demodulate(&modulate(&bits, &m).unwrap(), &m), bits);
    }

    #[test]
    fn precheck_is_a_circular_slice(seed in any::<u64>(), t in 2usize..80, start_frac in 0.0f64..1.0, len_frac in 0.0f64..1.0) {
        let m = Modulation::qam16();
        let table = generate_table(t, &m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let start = ((t as f64 * start_frac) as usize).min(t - 1);
        let length = 1 + ((t as f64 * len_frac) as usize).min(t - 1);
        let got = select_precheck(&table, PrecheckSelection { start, length }).unwrap();
        let want: Vec<Complex64> = (0..length).map(|k| table.base()[(start + k) % t]).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn ci_contains_the_rate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = (n as f64 * frac) as u64;
        let (lo, hi) = proportion_ci(k, n, 0.95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trials_terminate_deterministically(seed in any::<u64>(), index in any::<u64>(), snr in prop::sample::select(vec![0.0, 10.0, f64::INFINITY])) {
        let world = World::new(ScenarioConfig { base_seed: seed, snr_db: snr, ..ScenarioConfig::default() }).unwrap();
        let a = run_trial(&world, index).unwrap();
        prop_assert!(a.ue_phase.is_terminal());
        prop_assert!(a.outcome != Outcome::NoHandover);
        prop_assert_eq!(a, run_trial(&world, index).unwrap());
    }
}
