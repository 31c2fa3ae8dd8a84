//! `repint`: channel analysis, ensemble sampling and repeated-interaction
//! simulation from the command line.
//!
//! Exit codes: 0 success, 1 self-test failure, 2 configuration error,
//! 3 numerical failure, 4 drift abort.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_b, RunConfig, TolProfile};

#[derive(Debug, Parser)]
#[command(name = "repint", version, about = "Repeated quantum interactions: channels, ensembles, dynamics")]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (or directory for `sample --figure-sets`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sampling (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    tol_profile: Option<TolProfile>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum, class-C verdict, irreducibility and positivity probes of one channel.
    CheckChannel(ChannelArgs),
    /// Eigenvalue samples from the asymptotic induced or the induced ensemble.
    Sample(SampleArgs),
    /// Run a repeated-interaction scheme and export distances to its limit.
    Simulate(SimulateArgs),
    /// Run the embedded acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Built-in channel.
    #[arg(long, value_parser = ["pauli", "identity", "depolarizing"])]
    fixture: Option<String>,
    /// Channel JSON in Stinespring or Kraus form.
    #[arg(long)]
    channel_file: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_prime: Option<usize>,
    /// Environment spectrum, e.g. `1,0` or `3/4,1/8,1/8`.
    #[arg(long)]
    b: Option<String>,
    /// Pure states sampled by the positivity probes.
    #[arg(long)]
    n_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, value_parser = ["asymptotic", "induced"])]
    ensemble: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_prime: Option<usize>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// Sample all nine reference parameter sets into the `--out` directory.
    #[arg(long)]
    figure_sets: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_parser = ["fixed", "random-env", "iid-unitary"])]
    scheme: Option<String>,
    #[arg(long, value_parser = ["pauli", "identity", "depolarizing"])]
    fixture: Option<String>,
    #[arg(long)]
    channel_file: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_prime: Option<usize>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    n_steps: Option<usize>,
    /// random-env: induced | fixed-spectrum | dirac; iid-unitary: constant | induced | periodic.
    #[arg(long)]
    env_law: Option<String>,
    /// Initial state: e0 | mixed | plus-y.
    #[arg(long)]
    rho0: Option<String>,
    /// Checkpoint every k steps instead of at powers of two.
    #[arg(long)]
    every: Option<usize>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Run only criteria whose id, name or tag matches.
    #[arg(long)]
    only: Option<String>,
}

fn b_flag(b: &Option<String>) -> Result<Option<Vec<f64>>, commands::CliError> {
    b.as_deref().map(parse_b).transpose().map_err(commands::CliError::Config)
}

fn flags(cli: &Cli) -> Result<RunConfig, commands::CliError> {
    let mut cfg = RunConfig {
        seed: cli.seed,
        out: cli.out.clone(),
        jobs: cli.jobs,
        tol_profile: cli.tol_profile,
        ..Default::default()
    };
    match &cli.command {
        Command::CheckChannel(a) => {
            cfg.fixture = a.fixture.clone();
            cfg.channel_file = a.channel_file.clone();
            cfg.d = a.d;
            cfg.d_prime = a.d_prime;
            cfg.b = b_flag(&a.b)?;
            cfg.n_samples = a.n_samples;
        }
        Command::Sample(a) => {
            cfg.ensemble = a.ensemble.clone();
            cfg.d = a.d;
            cfg.d_prime = a.d_prime;
            cfg.b = b_flag(&a.b)?;
            cfg.n_samples = a.n_samples;
            cfg.figure_sets = a.figure_sets.then_some(true);
        }
        Command::Simulate(a) => {
            cfg.scheme = a.scheme.clone();
            cfg.fixture = a.fixture.clone();
            cfg.channel_file = a.channel_file.clone();
            cfg.d = a.d;
            cfg.d_prime = a.d_prime;
            cfg.b = b_flag(&a.b)?;
            cfg.n_steps = a.n_steps;
            cfg.env_law = a.env_law.clone();
            cfg.rho0 = a.rho0.clone();
            cfg.every = a.every;
        }
        Command::Selftest(a) => cfg.only = a.only.clone(),
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), commands::CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(commands::CliError::Config)?,
        None => RunConfig::default(),
    };
    let cfg = base.overlay(&flags(cli)?);
    match cli.command {
        Command::CheckChannel(_) => commands::check_channel(&cfg),
        Command::Sample(_) => commands::sample(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Selftest(_) => commands::selftest(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, commands::CliError::SelftestFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
