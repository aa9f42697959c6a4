//! `psdsim sweep` writes SCR estimates as CSV; `psdsim trial` replays one
//! trial with its message trace.
//!
//! Exit codes: 0 on success, 1 on a configuration error, 2 on an I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psd_core::harness::{run_sweep, run_trial_traced, write_csv, Axis, Execution, ScenarioConfig, World};
use psd_core::Error;

#[derive(Parser)]
#[command(version, about = "Monte Carlo simulator for precheck-sequence FBS detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the successful cheating rate along one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// snr, fbs_power, table_length or seq_length
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Run trials on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Run one trial and print its message trace.
    Trial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// psd, rss3sigma, distance or region
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override any config key, e.g. --set snr_db=inf
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(kv.clone(), "expected KEY=VALUE"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(d) = &self.detector {
            overrides.push(("detector".into(), d.clone()));
        }
        if let Some(t) = self.trials {
            overrides.push(("trials".into(), t.to_string()));
        }
        if let Some(s) = self.seed {
            overrides.push(("base_seed".into(), s.to_string()));
        }
        ScenarioConfig::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep {
            common,
            axis,
            values,
            out,
            serial,
        } => {
            let cfg = common.resolve()?;
            eprint!("{}", cfg.banner());
            let execution = if serial { Execution::Serial } else { Execution::Parallel };
            let results = run_sweep(&cfg, axis, &values, execution)?;
            if results.is_empty() {
                return Err(Error::config("values", "no valid sweep value"));
            }
            write_csv(&results, &out)?;
            for r in &results {
                eprintln!(
                    "{} T={} L={} snr={} scr={:.6} [{:.6}, {:.6}] rejected={} errors={}",
                    r.scheme, r.table_len, r.seq_len, r.snr_db, r.scr, r.ci95.0, r.ci95.1,
                    r.tally.rejections, r.tally.errors
                );
            }
        }
        Command::Trial { common, index } => {
            let cfg = common.resolve()?;
            print!("{}", cfg.banner());
            let world = World::new(cfg)?;
            let t = run_trial_traced(&world, index)?;
            println!("time_s,sender,receiver,message");
            for entry in &t.trace {
                println!("{entry}");
            }
            println!("# outcome {:?} (UE {:?})", t.outcome, t.ue_phase);
            println!("# {:?}", t.diagnostics);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => 2,
                _ => 1,
            })
        }
    }
}
