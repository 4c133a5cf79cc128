//! Batch entry point: configuration, subcommands and exit codes.

mod config;
mod expr;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    parse_number, DataSection, DomainSection, OperatorSection, OutputSection, RegularitySection, RunConfig,
    VerificationSection,
};
pub use expr::Expr;
pub use run::{exit_code, run_barriers, run_oracle, run_regularity, run_solve, run_verify, ExitCode, Outcome};

#[derive(Debug, Parser)]
#[command(name = "freetrans", version, about = "Degenerate free transmission problem lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// INI run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Artifact directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the ε-continuation and write the solution.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Touching tests and the large-gradient check on a solution CSV.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Free boundary, Hölder exponents and C^{1,α} ratios of a solution CSV.
    Regularity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Write the pure-power exact solution matching the configured rates.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Write the barrier pair and its constants.
    Barriers {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Solve { common } => load(common).and_then(|c| run_solve(&c)),
        Command::Verify { common, solution } => load(common).and_then(|c| run_verify(&c, solution)),
        Command::Regularity { common, solution } => load(common).and_then(|c| run_regularity(&c, solution)),
        Command::Oracle { common } => load(common).and_then(|c| run_oracle(&c)),
        Command::Barriers { common } => load(common).and_then(|c| run_barriers(&c)),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            outcome.code as i32
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e) as i32
        }
    }
}
