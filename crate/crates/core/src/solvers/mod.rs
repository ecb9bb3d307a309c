//! Capacity iterations and the outer convergence loop.

mod classical;
mod line_search;
mod matz;
mod proximal;
mod strategy;

pub use classical::{classical_step, Classical};
pub use line_search::golden_section_max;
pub use matz::{matz_step, Matz, StepSchedule, DEFAULT_MATZ_LAMBDA};
pub use proximal::{
    phi, proximal_step, search_lambda, select_lambda, LambdaChoice, LambdaSearch, Proximal,
    ProximalSettings, ProximalStep, PHI_FLOOR,
};
pub use strategy::{CapacityIteration, Registry, StepOutcome, VariantOptions};

use std::fmt;

use crate::diagnostics::penalty;
use crate::error::{CapacityError, Result};
use crate::prob::{
    capacity_bounds, mutual_information, output_marginal, ProbVec, TransitionMatrix,
};

/// Built-in iteration schemes with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Classical,
    Matz(StepSchedule),
    Proximal(ProximalSettings),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Classical => "classical",
            Self::Matz(_) => "matz",
            Self::Proximal(_) => "proximal",
        }
    }

    pub fn build(&self) -> Result<Box<dyn CapacityIteration>> {
        Ok(match self {
            Self::Classical => Box::new(Classical),
            Self::Matz(schedule) => Box::new(Matz::new(schedule.clone())?),
            Self::Proximal(settings) => Box::new(Proximal::new(*settings)?),
        })
    }

    /// All three with default parameters.
    pub fn all_default() -> [Variant; 3] {
        [
            Self::Classical,
            Self::Matz(StepSchedule::default()),
            Self::Proximal(ProximalSettings::default()),
        ]
    }
}

/// When the outer loop declares convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoppingRule {
    /// `upper − lower ≤ tolerance` at the current prior.
    #[default]
    BoundGap,
    /// `|I(p_k) − I(p_{k−1})| ≤ tolerance`.
    Increment,
}

impl std::str::FromStr for StoppingRule {
    type Err = CapacityError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" | "bound-gap" => Ok(Self::BoundGap),
            "increment" => Ok(Self::Increment),
            other => Err(CapacityError::InvalidParameter(format!(
                "unknown stopping rule '{other}' (expected 'gap' or 'increment')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Nats.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stopping: StoppingRule,
    /// Uniform when absent; must be strictly positive.
    pub initial_prior: Option<ProbVec>,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            tolerance: 1e-11,
            max_iterations: 10_000,
            stopping: StoppingRule::BoundGap,
            initial_prior: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_stopping(mut self, stopping: StoppingRule) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn with_initial_prior(mut self, prior: ProbVec) -> Self {
        self.initial_prior = Some(prior);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(CapacityError::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(CapacityError::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if let Some(prior) = &self.initial_prior {
            prior.require_strictly_positive()?;
        }
        Ok(())
    }
}

/// State after the `index`-th update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub prior: ProbVec,
    pub marginal: ProbVec,
    pub mutual_info: f64,
    pub lower: f64,
    pub upper: f64,
    pub lambda: f64,
    /// `D(p_k‖p_{k−1}) − D(q_k‖q_{k−1})`.
    pub penalty: f64,
    pub inner_iterations: usize,
    pub fallback: bool,
}

impl IterationRecord {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    NumericalFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max-iterations",
            Self::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub variant: &'static str,
    /// Nats; the last lower bound reached.
    pub capacity: f64,
    pub optimal_prior: ProbVec,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub iterations: usize,
    /// Set when `termination` is `NumericalFailure`.
    pub failure: Option<String>,
}

/// Runs the configured variant on `channel`.
pub fn solve(channel: &TransitionMatrix, config: &SolverConfig) -> Result<SolveResult> {
    let iteration = config.variant.build()?;
    solve_with(channel, iteration.as_ref(), config)
}

/// Runs an arbitrary iteration scheme; `config.variant` is ignored.
///
/// Invalid configuration or a prior that does not fit the channel is an
/// error. Breakdowns during the run end with `NumericalFailure` and keep the
/// partial trace.
pub fn solve_with(
    channel: &TransitionMatrix,
    iteration: &dyn CapacityIteration,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let mut prior = config
        .initial_prior
        .clone()
        .unwrap_or_else(|| ProbVec::uniform(channel.input_size()));
    if prior.len() != channel.input_size() {
        return Err(CapacityError::Dimension {
            expected: channel.input_size(),
            found: prior.len(),
        });
    }
    let mut previous_info = mutual_information(&prior, channel)?;
    let mut trace: Vec<IterationRecord> = Vec::new();

    let finish = |trace: Vec<IterationRecord>, prior: ProbVec, info: f64, termination, failure| {
        SolveResult {
            variant: iteration.name(),
            capacity: info,
            optimal_prior: prior,
            iterations: trace.len(),
            trace,
            termination,
            failure,
        }
    };

    for k in 1..=config.max_iterations {
        let evaluated = iteration.step(&prior, channel, k).and_then(|outcome| {
            if !outcome.prior.is_strictly_positive() {
                return Err(CapacityError::Numerical(format!(
                    "update {k} produced a prior with zero mass: {}",
                    outcome.prior
                )));
            }
            let bounds = capacity_bounds(&outcome.prior, channel)?;
            let marginal = output_marginal(&outcome.prior, channel)?;
            let pen = penalty(&outcome.prior, &prior, channel)?;
            if !(bounds.lower.is_finite() && bounds.upper.is_finite() && pen.is_finite()) {
                return Err(CapacityError::Numerical(format!(
                    "non-finite bounds at update {k}"
                )));
            }
            Ok(IterationRecord {
                index: k,
                prior: outcome.prior,
                marginal,
                mutual_info: bounds.lower,
                lower: bounds.lower,
                upper: bounds.upper,
                lambda: outcome.lambda,
                penalty: pen,
                inner_iterations: outcome.inner_iterations,
                fallback: outcome.fallback,
            })
        });
        let record = match evaluated {
            Ok(record) => record,
            Err(err) => {
                return Ok(finish(
                    trace,
                    prior,
                    previous_info,
                    Termination::NumericalFailure,
                    Some(err.to_string()),
                ))
            }
        };

        let converged = match config.stopping {
            StoppingRule::BoundGap => record.gap() <= config.tolerance,
            StoppingRule::Increment => {
                (record.mutual_info - previous_info).abs() <= config.tolerance
            }
        };
        prior = record.prior.clone();
        previous_info = record.mutual_info;
        trace.push(record);
        if converged {
            return Ok(finish(
                trace,
                prior,
                previous_info,
                Termination::Converged,
                None,
            ));
        }
    }
    Ok(finish(
        trace,
        prior,
        previous_info,
        Termination::MaxIterations,
        None,
    ))
}
