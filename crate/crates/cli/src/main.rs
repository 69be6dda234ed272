//! `antiplane`: command line driver for the anti-plane crack lattice model.
//!
//! Subcommands: `solve` (truncated corrector problem plus decay reports),
//! `greens` (discrete Green's function column, decomposition remainder, and
//! diagnostics), `converge` (error versus domain radius), and `sinclair`
//! (single-coefficient augmentation comparison). All knobs resolve as flags
//! over config file over defaults; reports land in the output directory as
//! JSON or CSV.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use antiplane::Site;

use antiplane_cli::config::{parse_site, CommonOpts};
use antiplane_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "antiplane",
    version,
    about = "Anti-plane crack lattice model: corrector solves, Green's functions, convergence and Sinclair studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the truncated corrector problem and report field decay.
    Solve {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Green's function column with kernel remainder and diagnostics.
    Greens {
        #[command(flatten)]
        common: CommonOpts,
        /// Source site "A,B" in lattice coordinates.
        #[arg(long, value_parser = parse_site)]
        source: Option<(i32, i32)>,
        /// Field-side cutoff correction: on or off.
        #[arg(long)]
        mu: Option<String>,
    },
    /// Convergence study across radii; the largest radius is the reference.
    Converge {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma separated radii, strictly increasing, at least three.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Comma separated predictor orders (default: the common order flag).
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u8>>,
    },
    /// Sinclair augmentation comparison against the plain K-field predictor.
    Sinclair {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common } => {
            let (cfg, _) = common.resolve()?;
            commands::cmd_solve(&cfg)
        }
        Command::Greens { common, source, mu } => {
            let (cfg, file) = common.resolve()?;
            let (a, b) = source
                .or(file.source.map(|[a, b]| (a, b)))
                .unwrap_or((41, 1));
            let mu = mu.or(file.mu).unwrap_or_else(|| "on".to_string());
            let mu_on = match mu.to_ascii_lowercase().as_str() {
                "on" => true,
                "off" => false,
                other => {
                    return Err(CliError::Config(format!(
                        "--mu expects on or off, got {other:?}"
                    )))
                }
            };
            commands::cmd_greens(&cfg, Site::new(a, b), mu_on)
        }
        Command::Converge {
            common,
            radii,
            orders,
        } => {
            let (cfg, file) = common.resolve()?;
            let radii = radii
                .or(file.radii)
                .ok_or_else(|| CliError::Config("converge needs --radii".to_string()))?;
            let orders = orders.or(file.orders).unwrap_or_else(|| vec![cfg.order]);
            commands::cmd_converge(&cfg, &radii, &orders)
        }
        Command::Sinclair { common } => {
            let (cfg, _) = common.resolve()?;
            commands::cmd_sinclair(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("antiplane: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
