use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use groundlab_cli::{parse_config, run, Mode, OUT_ENV};

#[derive(Parser)]
#[command(
    name = "groundlab",
    version,
    about = "Ground states of subcritical NLS energies and their blow-up"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the soliton profile and dump it.
    Soliton(Args),
    /// Soliton constants and identity residuals.
    Constants(Args),
    /// Well classification and minimization of Q.
    Qmin(Args),
    /// One constrained minimizer.
    Minimize(Args),
    /// Minimizers along an increasing list of rho.
    Sweep(Args),
    /// Sweep plus the concentration, expansion, selection and consistency
    /// checks.
    Verify(Args),
    /// Minimizers from seeded random starts.
    Probe(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; beats the GROUNDLAB_OUT variable and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (mode, args) = match cli.command {
        Command::Soliton(a) => (Mode::Soliton, a),
        Command::Constants(a) => (Mode::Constants, a),
        Command::Qmin(a) => (Mode::Qmin, a),
        Command::Minimize(a) => (Mode::Minimize, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Probe(a) => (Mode::Probe, a),
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let source = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&source, mode).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("groundlab-out"));
    let outcome = run(&cfg, mode, &out)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
