use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use parafree::commands::{self, Failure, Lines};
use parafree::config::RunConfig;
use parafree::suite::{Fault, SuiteOptions};

#[derive(Parser)]
#[command(name = "parafree", version, about = "Solve and analyse parabolic free boundary problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    /// Negate the closed-form Pucci maximum.
    PucciSign,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write fields, masks and a residual report.
    Solve { config: PathBuf },
    /// Run the configured estimators on a field.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Build the polynomial ladder at the origin.
    Ladder {
        config: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Fit blow-up profiles and free boundary slopes.
    Blowup {
        config: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Halve the resolution.
        #[arg(long)]
        coarse: bool,
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Operator utilities.
    Operators {
        #[command(subcommand)]
        command: OperatorCommand,
    },
}

#[derive(Subcommand)]
enum OperatorCommand {
    /// Check ellipticity and convexity hypotheses on random samples.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PARAFREE_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Config(format!("PARAFREE_THREADS={v} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("PARAFREE_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<Lines, (Lines, Failure)> {
    let bare = |f: Failure| (Lines::new(), f);
    configure_threads().map_err(bare)?;
    let load = |p: &PathBuf| RunConfig::load(p).map_err(|e| bare(e.into()));
    match cli.command {
        Command::Solve { config } => commands::solve(&load(&config)?),
        Command::Analyze { config, field, mask } => {
            commands::analyze(&load(&config)?, field.as_deref(), mask.as_deref()).map_err(bare)
        }
        Command::Ladder { config, field, mask } => {
            commands::run_ladder(&load(&config)?, field.as_deref(), mask.as_deref()).map_err(bare)
        }
        Command::Blowup { config, field, mask } => {
            commands::run_blowup(&load(&config)?, field.as_deref(), mask.as_deref()).map_err(bare)
        }
        Command::Verify { coarse, inject_fault, only } => {
            let fault = inject_fault.map(|FaultArg::PucciSign| Fault::PucciSign);
            commands::verify(&SuiteOptions { coarse, fault }, &only)
        }
        Command::Operators { command: OperatorCommand::Validate { config, samples, seed } } => {
            commands::validate_operator(&load(&config)?, samples, seed).map_err(bare)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err((lines, failure)) => {
            for l in lines {
                println!("{l}");
            }
            eprintln!("{}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
