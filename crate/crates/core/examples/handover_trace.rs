//! Walk one handover message by message: first without an attacker, then
//! with an FBS guessing the sequence, then with one that knows it.

use psd_core::harness::{run_trial_traced, ScenarioConfig, World};

fn show(title: &str, cfg: ScenarioConfig, index: u64) -> psd_core::Result<()> {
    let t = run_trial_traced(&World::new(cfg)?, index)?;
    println!("== {title}");
    for entry in &t.trace {
        println!("  {entry}");
    }
    let d = &t.diagnostics;
    println!(
        "  -> {:?}; true start {:?}, fbs guess {:?}, ber legit {:?} fbs {:?}\n",
        t.outcome, d.true_start, d.fbs_guess, d.legit_ber, d.fbs_ber
    );
    Ok(())
}

fn main() -> psd_core::Result<()> {
    let base = ScenarioConfig {
        snr_db: 15.0,
        ..ScenarioConfig::default()
    };
    show(
        "no attacker",
        ScenarioConfig {
            fbs_enabled: false,
            ..base.clone()
        },
        0,
    )?;
    show("guessing fbs", base.clone(), 0)?;
    show(
        "fbs that knows the start index",
        ScenarioConfig {
            fbs_oracle_start: true,
            snr_db: f64::INFINITY,
            ..base
        },
        0,
    )
}
