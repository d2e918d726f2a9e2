// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod table;

use config::RunConfig;
use error::CliError;

/// Finite-length bounds and error exponents for joint source-channel coding
/// of a Markov source over a Markov conditional additive channel.
///
/// Configuration is a JSON object read from --config or stdin. Chains are
/// given as a preset "W(p,q)" (binary chain [[1-p, q], [p, 1-q]], no side
/// state) or as {"matrix": rows, "x_size", "z_size", "initial"} with
/// matrix[to][from] column-stochastic. All logarithms are natural.
///
/// Exit codes: 0 success, 1 config error, 2 computation error, 3 every bound
/// in the output is vacuous.
#[derive(Debug, Parser)]
#[command(name = "jscc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file (default: stdin)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid points per coordinate for the finite-length optimisers
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(3..))]
    grid_density: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy rates, dispersions, order-zero entropies, assumption checks.
    ///
    /// Columns: quantity, value.
    Measures,
    /// Finite-length bounds on ln P_j(k, n).
    ///
    /// Needs source, channel and one of {k, n}, {k_range, n} or
    /// {n_values, r}; "bounds" picks kinds among direct_a1, converse_a1,
    /// direct_a2, converse_a2. Columns: k, n, bound, log_bound, s, rho,
    /// status (finite | vacuous | error: ...).
    Bounds,
    /// Error exponents, critical rate and moderate-deviation coefficient.
    ///
    /// Needs source, channel and r or r_values. Columns: r, optimal_rate,
    /// dispersion, critical_rate, direct_a1, direct_a2, converse_a1,
    /// converse_a2, md_per_n. Empty cells are outside their rate range.
    Asymptotics,
    /// Figure data for W_s = W_c = W(0.1,0.2).
    ///
    /// 1: k-sweep at n = 10000 (k_range/n overridable); columns k,
    /// direct_a2, converse_a2 (bounds on -ln P_j), n_exponent = n E(k/n),
    /// e_md. 2: n-sweep at k = floor(0.75 n) (n_values overridable);
    /// columns n, k, direct_a2, converse_a2 (bounds on -ln P_j / n),
    /// exponent = E(0.75).
    Reproduce {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        figure: u8,
    },
    /// Exact n-fold enumeration against the correction-term sandwiches.
    ///
    /// Uses the configured source and/or channel, else W(0.1,0.2); thetas,
    /// theta_primes and n_max optional. Columns: chain, family, theta,
    /// theta_prime, n, lower, exact, upper, margin.
    Oracle,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let grid = cli.grid_density.map(|g| g as usize);
    // reproduce and oracle have usable defaults and never wait on stdin
    let optional = || match &cli.config {
        Some(p) => RunConfig::load(Some(p)),
        None => Ok(RunConfig::default()),
    };
    let outcome = match &cli.command {
        Command::Measures => commands::measures(&RunConfig::load(cli.config.as_deref())?)?,
        Command::Bounds => commands::bounds(&RunConfig::load(cli.config.as_deref())?, grid)?,
        Command::Asymptotics => commands::asymptotics(&RunConfig::load(cli.config.as_deref())?)?,
        Command::Reproduce { figure } => commands::reproduce(*figure, &optional()?, grid)?,
        Command::Oracle => commands::oracle(&optional()?)?,
    };
    match &cli.out {
        Some(p) => outcome.table.write(BufWriter::new(File::create(p)?))?,
        None => outcome.table.write(io::stdout().lock())?,
    }
    outcome.status
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jscc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
