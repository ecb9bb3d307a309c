use crate::error::Result;
use crate::prob::{marginal_into, surprisal_into, ProbVec, TransitionMatrix};

use super::strategy::{CapacityIteration, StepOutcome};

/// `p'(x) ∝ p(x) exp(D_x / lambda)` with `D_x` taken against the marginal of `p`.
pub(crate) fn exponentiated_step(
    p: &ProbVec,
    channel: &TransitionMatrix,
    lambda: f64,
) -> Result<ProbVec> {
    if p.len() != channel.input_size() {
        return Err(crate::CapacityError::Dimension {
            expected: channel.input_size(),
            found: p.len(),
        });
    }
    p.require_strictly_positive()?;
    let mut q = vec![0.0; channel.output_size()];
    marginal_into(p.as_slice(), channel, &mut q);
    let mut d = vec![0.0; channel.input_size()];
    surprisal_into(channel, &q, &mut d)?;
    let log_weights: Vec<f64> = p
        .iter()
        .zip(&d)
        .map(|(w, dx)| w.ln() + dx / lambda)
        .collect();
    ProbVec::from_log_weights(&log_weights)
}

/// One Blahut-Arimoto update, `p'(x) = p(x) exp(D_x) / sum_x p(x) exp(D_x)`.
pub fn classical_step(p: &ProbVec, channel: &TransitionMatrix) -> Result<ProbVec> {
    exponentiated_step(p, channel, 1.0)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Classical;

impl CapacityIteration for Classical {
    fn name(&self) -> &'static str {
        "classical"
    }

    fn step(
        &self,
        prior: &ProbVec,
        channel: &TransitionMatrix,
        _iteration: usize,
    ) -> Result<StepOutcome> {
        Ok(StepOutcome {
            prior: classical_step(prior, channel)?,
            lambda: 1.0,
            inner_iterations: 0,
            fallback: false,
        })
    }
}
