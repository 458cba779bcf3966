use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tropskel::config::load_config;
use tropskel::pipeline::{run, write_outputs, Subcommand};
use tropskel::TropskelError;

#[derive(Parser, Debug)]
#[command(name = "tropskel", version, about = "Tropical skeleta of hypersurfaces near the tropical limit")]
struct Cli {
    /// triangulate, amoeba, potential-check, critical, skeleton or verify
    subcommand: Subcommand,
    /// TOML configuration file
    config: PathBuf,
    /// Output directory (overrides `outputs.directory`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `instance.beta`
    #[arg(long)]
    beta: Option<f64>,
    /// Overrides `seed`
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() {
    if let Some(n) = std::env::var("TROPSKEL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main_inner(cli: Cli) -> Result<bool, TropskelError> {
    let mut cfg = load_config(&cli.config)?;
    if let Some(b) = cli.beta {
        if !(b.is_finite() && b > 0.0) {
            return Err(TropskelError::input("arguments", format!("--beta must be positive, got {b}")));
        }
        cfg.instance.beta = b;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.unwrap_or_else(|| cfg.outputs.directory.clone());
    let report = run(cli.subcommand, &cfg)?;
    let (files, skipped) = write_outputs(&report, &out)?;
    if let Some(e) = skipped {
        eprintln!("UnsupportedDimension: {e}");
    }
    for row in &report.checks {
        println!("{} {} measured={} ({})", if row.pass { "PASS" } else { "FAIL" }, row.name, row.measured, row.threshold);
        if !row.pass && !row.detail.is_empty() {
            println!("    {}", row.detail);
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
