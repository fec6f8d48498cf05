use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nhqc::lab::{run_named_experiment, ExperimentConfig, ExperimentKind, SweepMode};

#[derive(Debug, Parser)]
#[command(
    name = "nhqc",
    version,
    about = "Holonomic gate pulse compiler and simulator"
)]
struct Cli {
    /// synth | propagate | qpt | rb | sweep | sideband | export-awg
    experiment: ExperimentKind,
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep mode: direct | rb
    #[arg(long)]
    mode: Option<SweepMode>,
}

fn run(cli: Cli) -> nhqc::Result<Vec<String>> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output = out;
    }
    if let Some(mode) = cli.mode {
        config.sweep.mode = mode;
    }
    let output = run_named_experiment(cli.experiment, &config)?;
    for f in &output.files {
        println!("{}", f.display());
    }
    Ok(output.flagged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(flagged) if flagged.is_empty() => ExitCode::SUCCESS,
        Ok(flagged) => {
            for note in flagged {
                eprintln!("warning: {note}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
