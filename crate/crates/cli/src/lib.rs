//! Command implementations behind the `capacity` binary.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | converged / all checks passed |
//! | 1 | iteration cap reached before convergence |
//! | 2 | usage, parse or I/O error |
//! | 3 | numerical failure (partial trace still written) |
//! | 4 | `compare`: variants disagree on capacity |
//! | 5 | `verify`: an identity was violated |

pub mod spec_file;
pub mod trace;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use capacity_core::diagnostics::identity_suite;
use capacity_core::solvers::{
    solve_with, Registry, SolveResult, SolverConfig, StoppingRule, Termination, Variant,
    VariantOptions,
};
use capacity_core::{nats_to_bits, ProbVec, TransitionMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MAX_ITERATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;
pub const EXIT_IDENTITY: i32 = 5;

/// Largest capacity spread `compare` accepts, in nats.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

pub const VARIANTS: [&str; 3] = ["classical", "matz", "proximal"];

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

/// Solver knobs shared by `run` and `compare`.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stopping: StoppingRule,
    pub prior: Option<Vec<f64>>,
    pub variant: VariantOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let base = SolverConfig::new(Variant::Classical);
        Self {
            tolerance: base.tolerance,
            max_iterations: base.max_iterations,
            stopping: base.stopping,
            prior: None,
            variant: VariantOptions::default(),
        }
    }
}

impl SolveOptions {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let mut config = SolverConfig::new(Variant::Classical)
            .with_tolerance(self.tolerance)
            .with_max_iterations(self.max_iterations)
            .with_stopping(self.stopping);
        if let Some(values) = &self.prior {
            config =
                config.with_initial_prior(ProbVec::new(values.clone()).map_err(Failure::usage)?);
        }
        Ok(config)
    }
}

pub fn load_channel_file(path: &Path) -> Result<TransitionMatrix, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    spec_file::load_channel(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// One solve through the registry, timed.
pub fn solve_named(
    registry: &Registry,
    name: &str,
    channel: &TransitionMatrix,
    options: &SolveOptions,
) -> Result<(SolveResult, Duration), Failure> {
    let iteration = registry
        .create(name, &options.variant)
        .map_err(Failure::usage)?;
    let config = options.config()?;
    let start = Instant::now();
    let result = solve_with(channel, iteration.as_ref(), &config).map_err(Failure::usage)?;
    Ok((result, start.elapsed()))
}

fn write_trace_file(path: &Path, result: &SolveResult) -> Result<(), Failure> {
    let file =
        File::create(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    trace::write_trace(BufWriter::new(file), result)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn termination_code(termination: Termination) -> i32 {
    match termination {
        Termination::Converged => EXIT_OK,
        Termination::MaxIterations => EXIT_MAX_ITERATIONS,
        Termination::NumericalFailure => EXIT_NUMERICAL,
    }
}

pub fn run(
    channel_file: &Path,
    variant: &str,
    options: &SolveOptions,
    output: &Path,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let channel = load_channel_file(channel_file)?;
    let registry = Registry::with_builtin();
    let (result, elapsed) = solve_named(&registry, variant, &channel, options)?;
    write_trace_file(output, &result)?;
    let _ = writeln!(
        out,
        "{}: capacity {:.15} nats ({:.15} bits), {} iterations, {} ({:.3} ms)",
        result.variant,
        result.capacity,
        nats_to_bits(result.capacity),
        result.iterations,
        result.termination,
        elapsed.as_secs_f64() * 1e3
    );
    if let Some(reason) = &result.failure {
        let _ = writeln!(out, "failure: {reason}");
    }
    Ok(termination_code(result.termination))
}

pub fn compare(
    channel_file: &Path,
    options: &SolveOptions,
    output_dir: &Path,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let channel = load_channel_file(channel_file)?;
    fs::create_dir_all(output_dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", output_dir.display())))?;
    let registry = Registry::with_builtin();

    let outcomes: Vec<Result<(SolveResult, Duration), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = VARIANTS
            .iter()
            .map(|name| {
                let (registry, channel) = (&registry, &channel);
                scope.spawn(move || {
                    let solved = solve_named(registry, name, channel, options)?;
                    write_trace_file(&output_dir.join(format!("{name}.csv")), &solved.0)?;
                    Ok(solved)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut results = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        results.push(outcome?);
    }

    let summary_path: PathBuf = output_dir.join("summary.csv");
    let mut summary = String::from(
        "variant,capacity_nats,capacity_bits,iterations,termination,wall_clock_seconds\n",
    );
    for (result, elapsed) in &results {
        summary.push_str(&format!(
            "{},{:.16e},{:.16e},{},{},{:.6}\n",
            result.variant,
            result.capacity,
            nats_to_bits(result.capacity),
            result.iterations,
            result.termination,
            elapsed.as_secs_f64()
        ));
        let _ = writeln!(
            out,
            "{:<9} {:.15} nats  {:>6} iterations  {:<18} {:.3} ms",
            result.variant,
            result.capacity,
            result.iterations,
            result.termination.to_string(),
            elapsed.as_secs_f64() * 1e3
        );
    }
    fs::write(&summary_path, summary)
        .map_err(|e| Failure::usage(format!("{}: {e}", summary_path.display())))?;

    if let Some((failed, _)) = results
        .iter()
        .find(|(r, _)| r.termination == Termination::NumericalFailure)
    {
        let _ = writeln!(
            out,
            "{} failed: {}",
            failed.variant,
            failed.failure.as_deref().unwrap_or("unknown")
        );
        return Ok(EXIT_NUMERICAL);
    }
    let capacities: Vec<f64> = results.iter().map(|(r, _)| r.capacity).collect();
    let spread = capacities.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - capacities.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread <= AGREEMENT_TOLERANCE) {
        let _ = writeln!(
            out,
            "capacities disagree by {spread:.3e} nats (limit {AGREEMENT_TOLERANCE:e})"
        );
        return Ok(EXIT_DISAGREEMENT);
    }
    if results
        .iter()
        .any(|(r, _)| r.termination == Termination::MaxIterations)
    {
        return Ok(EXIT_MAX_ITERATIONS);
    }
    Ok(EXIT_OK)
}

pub fn verify(samples: usize, seed: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let reports = identity_suite(samples, seed).map_err(Failure::usage)?;
    for report in &reports {
        let _ = writeln!(out, "{report}");
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    if failed.is_empty() {
        return Ok(EXIT_OK);
    }
    for report in failed {
        let _ = writeln!(
            out,
            "violated: {} (max {:.3e} > {:.1e}) witness: {}",
            report.name,
            report.max_violation,
            report.threshold,
            report.witness.as_deref().unwrap_or("none recorded")
        );
    }
    Ok(EXIT_IDENTITY)
}

pub fn spec_dump(
    channel_file: &Path,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let channel = load_channel_file(channel_file)?;
    let text = spec_file::render_matrix(&channel);
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => out.write_all(text.as_bytes()).map_err(Failure::usage)?,
    }
    Ok(EXIT_OK)
}
