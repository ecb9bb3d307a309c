use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use capacity_cli::{Failure, SolveOptions};
use capacity_core::solvers::{StoppingRule, VariantOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "capacity",
    version,
    about = "Channel capacity by Blahut-Arimoto-type iterations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel with one variant and write its trace.
    Run {
        channel: PathBuf,
        /// classical, matz or proximal
        #[arg(long, default_value = "proximal")]
        variant: String,
        #[command(flatten)]
        solve: SolveArgs,
        /// Trace file (CSV).
        #[arg(long, default_value = "trace.csv")]
        output: PathBuf,
    },
    /// Solve with all three variants concurrently and summarize.
    Compare {
        channel: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Directory for the per-variant traces and summary.csv.
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Check the information identities on seeded random channels.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print a channel spec as an explicit matrix.
    SpecDump {
        channel: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Convergence tolerance in nats.
    #[arg(long, default_value_t = 1e-11)]
    tolerance: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Stopping rule: gap (upper - lower bound) or increment (change in I).
    #[arg(long, default_value = "gap", value_parser = parse_stop)]
    stop: StoppingRule,
    /// Fixed Matz step size.
    #[arg(long)]
    lambda: Option<f64>,
    /// Proximal step-size search interval, as LO,HI.
    #[arg(long = "lambda-range", value_parser = parse_range)]
    lambda_range: Option<(f64, f64)>,
    /// Starting prior, comma-separated; uniform by default.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
}

impl SolveArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iter,
            stopping: self.stop,
            prior: self.prior.clone(),
            variant: VariantOptions {
                lambda: self.lambda,
                lambda_range: self.lambda_range,
                ..VariantOptions::default()
            },
        }
    }
}

fn parse_stop(s: &str) -> Result<StoppingRule, String> {
    s.parse()
        .map_err(|e: capacity_core::CapacityError| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound '{hi}'"))?;
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let outcome = match &cli.command {
        Command::Run {
            channel,
            variant,
            solve,
            output,
        } => capacity_cli::run(channel, variant, &solve.options(), output, &mut stdout),
        Command::Compare {
            channel,
            solve,
            output,
        } => capacity_cli::compare(channel, &solve.options(), output, &mut stdout),
        Command::Verify { samples, seed } => capacity_cli::verify(*samples, *seed, &mut stdout),
        Command::SpecDump { channel, output } => {
            capacity_cli::spec_dump(channel, output.as_deref(), &mut stdout)
        }
    };
    let code = match outcome {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            code
        }
    };
    ExitCode::from(code as u8)
}
