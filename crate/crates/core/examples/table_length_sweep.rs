//! Sweep the table length and write the CSV the plotting scripts read.
//!
//!     cargo run --release --example table_length_sweep [out.csv]

use std::path::PathBuf;

use psd_core::harness::{run_sweep, write_csv, Axis, Execution, ScenarioConfig};

fn main() -> psd_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("psd_table_length.csv"));
    let cfg = ScenarioConfig {
        trials: 20_000,
        ..ScenarioConfig::default()
    };
    let results = run_sweep(&cfg, Axis::TableLength, &[8.0, 16.0, 32.0, 64.0, 128.0], Execution::Parallel)?;
    for r in &results {
        println!("T = {:>3}: scr {:.4}", r.table_len, r.scr);
    }
    write_csv(&results, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
