//! Command-line front end for the `modnod` library.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{CliError, Ctx, Outputs};
use config::{parse_config, CommandName, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "modnod", version, about = "Modulated nonlinear opinion dynamics: simulation, continuation and bifurcation analysis")]
pub struct Cli {
    /// JSON run configuration; read from stdin when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Skip the SVG plot.
    #[arg(long, global = true)]
    pub no_svg: bool,
    /// Seed for random initial states; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the dynamics at fixed u0.
    Simulate,
    /// Solve for one equilibrium at fixed u0.
    Equilibrium,
    /// Trace the bifurcation diagram over a u0 range.
    Diagram,
    /// Reduced-map derivatives at the opinion-forming singularity.
    Reduce,
    /// Leading eigenpair and critical attention.
    Analyze,
    /// Reference networks.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioAction {
    List,
}

fn read_config(path: Option<&PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| CliError::io(&PathBuf::from("<stdin>"), e))?;
            Ok(s)
        }
    }
}

/// Runs a command and returns its summary, writing output files to `cli.out`.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let name = match cli.command {
        Command::Simulate => CommandName::Simulate,
        Command::Equilibrium => CommandName::Equilibrium,
        Command::Diagram => CommandName::Diagram,
        Command::Reduce => CommandName::Reduce,
        Command::Analyze => CommandName::Analyze,
        Command::Scenario { action: ScenarioAction::List } => return Ok(commands::scenario_list()),
    };
    let cfg = parse_config(&read_config(cli.config.as_ref())?)?;
    if let Some(c) = cfg.command {
        if c != name {
            return Err(ConfigError::invalid("command", format!("config is for `{c}`, invoked as `{name}`")).into());
        }
    }
    let ctx = Ctx { cfg: &cfg, seed: cli.seed.or(cfg.seed).unwrap_or(0), svg: !cli.no_svg };
    let (summary, out): (String, Outputs) = match name {
        CommandName::Simulate => commands::simulate(&ctx)?,
        CommandName::Equilibrium => commands::equilibrium(&ctx)?,
        CommandName::Diagram => commands::diagram_cmd(&ctx)?,
        CommandName::Reduce => commands::reduce(&ctx)?,
        CommandName::Analyze => commands::analyze(&ctx)?,
    };
    out.write_to(&cli.out)?;
    log::info!("wrote {} to {}", out.names().collect::<Vec<_>>().join(", "), cli.out.display());
    Ok(summary)
}

/// Runs `cli`, printing the summary or the error, and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                println!("{summary}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            e.exit_code()
        }
    }
}
