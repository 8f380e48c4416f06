use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use reflekt_core::PresetName;

mod commands;
mod config;
mod manifest;

use config::{ConfigErrors, EngineKind, ExperimentConfig, Sources, SEED_ENV};

#[derive(Parser)]
#[command(name = "reflekt", version, about = "Reflected FBSDE experiments driven by TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<PresetName>,
    /// Overrides the config file and REFLEKT_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
    /// Dotted `key=value` override in TOML syntax, applied last. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled checks of the structural assumptions and compatibility.
    ValidateAssumptions(Common),
    /// Reflected Euler paths with local time.
    SimulateForward(Common),
    /// Backward solve with the configured engine.
    Solve(Common),
    /// The value function on the engine's grid.
    ValueSurface(Common),
    /// Gaps of the value function along a sequence converging to a point.
    Continuity(Common),
    /// Grid engine against the finite-difference oracle.
    ComparePde(Common),
    /// Conditional-variation diagnostic along a sequence, with a scaled control.
    Tightness(Common),
    /// Randomized checks of the resolvent and envelope identities.
    ConvexSelftest(Common),
    /// Variation refinement and Stieltjes identities on random paths.
    CadlagSelftest(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::ValidateAssumptions(c)
            | Command::SimulateForward(c)
            | Command::Solve(c)
            | Command::ValueSurface(c)
            | Command::Continuity(c)
            | Command::ComparePde(c)
            | Command::Tightness(c)
            | Command::ConvexSelftest(c)
            | Command::CadlagSelftest(c) => c,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = cli.command.common();
    let sources = Sources {
        config: c.config.clone(),
        preset: c.preset,
        seed: c.seed,
        env_seed: std::env::var(SEED_ENV).ok(),
        out: c.out.clone(),
        engine: c.engine,
        overrides: c.overrides.clone(),
    };
    let cfg = ExperimentConfig::resolve(&sources)?;
    let manifest = match cli.command {
        Command::ValidateAssumptions(_) => commands::validate_assumptions(&cfg),
        Command::SimulateForward(_) => commands::simulate_forward(&cfg),
        Command::Solve(_) => commands::solve(&cfg),
        Command::ValueSurface(_) => commands::value_surface_cmd(&cfg),
        Command::Continuity(_) => commands::continuity(&cfg),
        Command::ComparePde(_) => commands::compare_pde(&cfg),
        Command::Tightness(_) => commands::tightness(&cfg),
        Command::ConvexSelftest(_) => commands::convex_selftest(&cfg),
        Command::CadlagSelftest(_) => commands::cadlag_selftest(&cfg),
    }?;
    println!("{}: wrote {} files to {}", manifest.command, manifest.outputs.len() + 1, cfg.out_dir().display());
    for (k, v) in &manifest.summary {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(cfg) = e.downcast_ref::<ConfigErrors>() {
                eprintln!("{cfg}");
                ExitCode::from(2)
            } else if let Some(num) = e.downcast_ref::<reflekt_core::Error>() {
                eprintln!("numerical error: {num}");
                ExitCode::from(3)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        }
    }
}
