use clap::{Parser, Subcommand};
use nrmatom::cli::{self, Mode, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Normalized random measures over interacting point processes: prior
/// analysis, posterior MCMC for Gaussian mixtures, and generative
/// simulation.
#[derive(Parser)]
#[command(name = "nrmatom", version, about)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of parallel chains.
    #[arg(long, global = true)]
    chains: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an MCMC fit and write trace plus summary files.
    Fit,
    /// Evaluate the distinct-value prior law over anchor layouts.
    PriorAnalysis,
    /// Draw a dataset from the generative model.
    Simulate,
    /// Recompute summaries from existing trace files.
    Summarize,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Cli) -> nrmatom::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env_overrides(std::env::vars())?;
    if let Some(seed) = args.seed {
        cfg.chain.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(chains) = args.chains {
        cfg.chain.chains = chains;
    }
    if args.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let mode = match args.command {
        Some(Command::Fit) => Mode::Fit,
        Some(Command::PriorAnalysis) => Mode::PriorAnalysis,
        Some(Command::Simulate) => Mode::Simulate,
        Some(Command::Summarize) => Mode::Summarize,
        None => {
            eprintln!("no subcommand given; try `nrmatom --help`");
            return Err(nrmatom::Error::Config("missing subcommand".into()));
        }
    };
    cli::run(mode, &cfg)
}
