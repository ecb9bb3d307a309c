use crate::error::{CapacityError, Result};
use crate::prob::{ProbVec, TransitionMatrix};

use super::classical::exponentiated_step;
use super::strategy::{CapacityIteration, StepOutcome};

pub const DEFAULT_MATZ_LAMBDA: f64 = 0.5;

/// Step sizes for the explicit accelerated update.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Fixed(f64),
    /// `values[k-1]` at update `k`; the last value repeats once exhausted.
    PerIteration(Vec<f64>),
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self::Fixed(DEFAULT_MATZ_LAMBDA)
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            Self::Fixed(v) => std::slice::from_ref(v),
            Self::PerIteration(v) if v.is_empty() => {
                return Err(CapacityError::InvalidParameter(
                    "empty step-size schedule".into(),
                ))
            }
            Self::PerIteration(v) => v,
        };
        match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            Some(v) => Err(CapacityError::InvalidParameter(format!(
                "step size must be positive and finite, got {v}"
            ))),
            None => Ok(()),
        }
    }

    pub fn lambda_at(&self, iteration: usize) -> f64 {
        match self {
            Self::Fixed(v) => *v,
            Self::PerIteration(v) => v[iteration.saturating_sub(1).min(v.len() - 1)],
        }
    }
}

/// `p'(x) ∝ p(x) exp(D_x / lambda)`; `lambda = 1` is the classical update.
pub fn matz_step(p: &ProbVec, channel: &TransitionMatrix, lambda: f64) -> Result<ProbVec> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CapacityError::InvalidParameter(format!(
            "step size must be positive and finite, got {lambda}"
        )));
    }
    exponentiated_step(p, channel, lambda)
}

#[derive(Debug, Clone)]
pub struct Matz {
    schedule: StepSchedule,
}

impl Matz {
    pub fn new(schedule: StepSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(Self { schedule })
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }
}

impl CapacityIteration for Matz {
    fn name(&self) -> &'static str {
        "matz"
    }

    fn step(
        &self,
        prior: &ProbVec,
        channel: &TransitionMatrix,
        iteration: usize,
    ) -> Result<StepOutcome> {
        let lambda = self.schedule.lambda_at(iteration);
        Ok(StepOutcome {
            prior: matz_step(prior, channel, lambda)?,
            lambda,
            inner_iterations: 0,
            fallback: false,
        })
    }

    fn is_monotone(&self) -> bool {
        false
    }
}
