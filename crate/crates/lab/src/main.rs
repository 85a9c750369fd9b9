use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hedgehog_lab::{run, Command, RunConfig, EXIT_CONFIG};

/// Hedgehog laboratory: classify, certify, compute petals and approximate
/// hedgehogs from a configuration file.
#[derive(Debug, Parser)]
#[command(name = "hedgehog", version)]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the command named in the configuration.
    #[arg(long, value_enum)]
    command: Option<Command>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the grid resolution.
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(c) = cli.command {
        cfg.command = c;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(r) = cli.resolution {
        cfg.resolution = r;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("threads: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let outcome = run(&cfg);
    if let Some(err) = outcome.report.get("error") {
        eprintln!("error: {}", err["message"].as_str().unwrap_or("unknown"));
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
