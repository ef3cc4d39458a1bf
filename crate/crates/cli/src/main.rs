//! `oplift`: membership oracles, slack factorizations, lifts and SOS
//! certificates from the command line.
//!
//! Reports go to stdout as one JSON document; a one-line summary goes to
//! stderr. Exit codes: 0 verified, 2 negative verdict, 3 inconclusive,
//! 64 usage, 65 bad data.

mod commands;
mod demos;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use report::{CliError, Report, EXIT_OK, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "oplift", version, about = "Operator systems over polyhedral cones")]
struct Cli {
    /// Seed for every random sample drawn by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance.
    #[arg(long, global = true, env = "OPLIFT_TOL", default_value_t = 1e-8)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide membership of a matrix element in an operator system.
    Membership {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        element: PathBuf,
        /// Expected matrix level of the element.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Check a slack factorization against the dual generators up to `--tmax`.
    VerifyFactorization {
        factorization: PathBuf,
        #[arg(long, default_value_t = 2)]
        tmax: usize,
    },
    /// Build a lift from a slack factorization.
    BuildLift {
        factorization: PathBuf,
        #[arg(long, default_value_t = 2)]
        tmax: usize,
        /// Write the lift here instead of embedding it in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a slack factorization from a lift.
    ExtractFactorization {
        lift: PathBuf,
        /// The cone the lift describes.
        #[arg(long)]
        cone: PathBuf,
        #[arg(long, default_value_t = 2)]
        tmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify or refute that a Hermitian matrix polynomial is a sum of squares.
    SosCertify {
        /// Polynomial JSON; `-` or nothing reads standard input.
        #[arg(default_value = "-")]
        poly: PathBuf,
        /// Degree of the monomial basis (default: half the polynomial's degree).
        #[arg(long)]
        basis_degree: Option<u32>,
    },
    /// Run a built-in scenario.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand, Debug)]
enum Demo {
    /// Kraus operators on the simplex.
    Simplex {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Square cone: non-linear factorization and lifted membership.
    Polyhedral {
        #[arg(long, default_value_t = 15)]
        samples: usize,
    },
    /// The Choi form.
    Choi {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Factorization to lift and back.
    Roundtrip {
        #[arg(long, default_value = "square")]
        cone: String,
    },
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    let tol = cli.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match &cli.command {
        Command::Membership { system, element, level } => commands::cmd_membership(system, element, *level, tol),
        Command::VerifyFactorization { factorization, tmax } => {
            commands::cmd_verify_factorization(factorization, *tmax, tol)
        }
        Command::BuildLift { factorization, tmax, out } => commands::cmd_build_lift(factorization, *tmax, out.as_ref()),
        Command::ExtractFactorization { lift, cone, tmax, out } => {
            commands::cmd_extract_factorization(lift, cone, *tmax, tol, out.as_ref())
        }
        Command::SosCertify { poly, basis_degree } => commands::cmd_sos_certify(poly, *basis_degree, tol),
        Command::Demo { demo } => match demo {
            Demo::Simplex { n, t, samples } => demos::simplex(*n, *t, *samples, tol, &mut rng),
            Demo::Polyhedral { samples } => demos::polyhedral(*samples, tol, &mut rng),
            Demo::Choi { samples } => demos::choi(*samples, tol, &mut rng),
            Demo::Roundtrip { cone } => demos::roundtrip(cone, tol),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            // a closed pipe is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            eprintln!("{}", report.summary());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("oplift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
