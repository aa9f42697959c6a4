//! Build the public symbol table, dump it as text, read it back, and cut a
//! precheck sequence that wraps around the end.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psd_core::phy::{demodulate, Modulation};
use psd_core::seqtable::{generate_table, random_selection, select_precheck, PrecheckSelection, SymbolTable};

fn main() -> psd_core::Result<()> {
    let m = Modulation::qam16();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let table = generate_table(32, &m, &mut rng)?;

    let path = std::env::temp_dir().join("psd_precheck_table.txt");
    table.save(&path)?;
    let reloaded = SymbolTable::load(&path, &m)?;
    assert_eq!(reloaded, table);
    println!("table of {} symbols written to {}", table.len(), path.display());

    let wrapped = PrecheckSelection { start: 30, length: 8 };
    let seq = select_precheck(&table, wrapped)?;
    let bits: String = demodulate(&seq, &m).iter().map(|&b| if b { '1' } else { '0' }).collect();
    println!("start 30, length 8 -> indices 30,31,0..5 -> bits {bits}");

    for _ in 0..3 {
        let sel = random_selection(32, 8, &mut rng)?;
        println!("random selection: start {}", sel.start);
    }
    Ok(())
}
