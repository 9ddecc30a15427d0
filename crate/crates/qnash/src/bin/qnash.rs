//! Command line entry point. All work happens in the library; this file
//! only maps flags onto a run configuration and streams the result.

use clap::{Parser, Subcommand, ValueEnum};
use qnash::run::{run, Command, OutputFormat, RunConfig, SolverOptions};
use std::io::{self, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Parser, Debug)]
#[command(
    name = "qnash",
    about = "Quantum Nash equilibria and the financial markets they price",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// Report format on standard output.
    #[arg(long, global = true, value_enum, default_value = "json", env = "QNASH_FORMAT")]
    format: Format,

    /// Certification tolerance for equilibrium and optimality checks.
    #[arg(long, global = true, default_value_t = 1e-8, env = "QNASH_TOL")]
    tol: f64,

    /// Seed for randomized restarts. Identical seeds give identical reports.
    #[arg(long, global = true, default_value_t = 0, env = "QNASH_SEED")]
    seed: u64,

    /// Iteration cap for the damped fixed-point solver.
    #[arg(long, global = true, default_value_t = 2000, env = "QNASH_MAX_ITER")]
    max_iter: usize,

    /// Damping factor for the fixed-point update, in (0, 1].
    #[arg(long, global = true, default_value_t = 0.5, env = "QNASH_DAMPING")]
    damping: f64,

    /// Number of random restarts after the uniform start.
    #[arg(long, global = true, default_value_t = 20, env = "QNASH_RESTARTS")]
    restarts: usize,

    /// Participation share when securitizing game positions.
    #[arg(long, global = true, default_value_t = 1.0, env = "QNASH_THETA")]
    theta: f64,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Solve a game for a mixed equilibrium and its price-amplitude ket.
    Solve {
        /// Game specification file.
        game: PathBuf,
    },
    /// Entangle the equilibrium ket with the lottery and reduce both sides.
    Lottery {
        /// Game specification file.
        game: PathBuf,
    },
    /// Solve a pure exchange economy under the equilibrium state prices.
    Economy {
        /// Game specification file.
        game: PathBuf,
        /// Economy specification file.
        economy: PathBuf,
    },
    /// Price securitized game positions off the equilibrium ket.
    Price {
        /// Game specification file.
        game: PathBuf,
    },
    /// Solve one investor's portfolio problem in a securities market.
    Portfolio {
        /// Game specification file.
        game: PathBuf,
        /// Securities specification file.
        securities: PathBuf,
        /// Relative risk aversion of the investor.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Time preference of the investor.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Time-0 consumption endowment.
        #[arg(long, default_value_t = 1.0)]
        endowment: f64,
        /// Initial security holdings, comma separated. Defaults to one of each.
        #[arg(long, value_delimiter = ',')]
        holdings: Option<Vec<f64>>,
    },
    /// Run the full pipeline on one game with a stock economy and investor.
    Demo {
        /// Game specification file.
        game: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let options = SolverOptions {
        tol: cli.tol,
        seed: cli.seed,
        max_iter: cli.max_iter,
        damping: cli.damping,
        restarts: cli.restarts,
        theta: cli.theta,
    };
    let command = match cli.command {
        CliCommand::Solve { game } => Command::Solve { game },
        CliCommand::Lottery { game } => Command::Lottery { game },
        CliCommand::Economy { game, economy } => Command::Economy { game, economy },
        CliCommand::Price { game } => Command::Price { game },
        CliCommand::Portfolio { game, securities, gamma, beta, endowment, holdings } => {
            Command::Portfolio {
                game,
                securities,
                gamma,
                beta,
                endowment_c0: endowment,
                endowment_holdings: holdings,
            }
        }
        CliCommand::Demo { game } => Command::Demo { game },
    };
    let format = match cli.format {
        Format::Json => OutputFormat::Json,
        Format::Table => OutputFormat::Table,
    };
    let config = RunConfig { command, format, options };

    let outcome = run(&config);
    for line in &outcome.diagnostics {
        eprintln!("{line}");
    }
    if let Some(report) = &outcome.report {
        let rendered = match format {
            OutputFormat::Json => report.to_json(),
            OutputFormat::Table => report.to_table(),
        };
        // A closed pipe downstream means the consumer is done reading, not
        // that the run failed.
        let _ = writeln!(io::stdout(), "{rendered}");
    }
    std::process::exit(outcome.exit_code);
}
