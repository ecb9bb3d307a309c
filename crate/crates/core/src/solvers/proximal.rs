//! Proximal-point capacity update with a per-iteration step size.
//!
//! The update maximizes `I(p) − λ (D(p‖p_k) − D(q‖q_k))` over the simplex.
//! Its stationarity condition
//!
//! ```text
//! p(x) ∝ p_k(x) exp{ Σ_y W(x,y) ln(q(y)/q_k(y)) + (1/λ) D(W_x ‖ q) }
//! ```
//!
//! is implicit in `q`, the marginal of the new prior. Write `T(r)` for the
//! right-hand side evaluated at the marginal of `r`. The inner loop iterates
//!
//! ```text
//! r ← normalize( r^(1−ω) · T(r)^ω ),   ω = min(λ, 1)
//! ```
//!
//! starting from `r = p_k`. For `λ ≥ 1` this is plain substitution. For
//! `λ < 1` plain substitution can diverge, and the geometric damping is the
//! minorize-maximize step obtained from the variational bound
//! `−D(q‖q_k) ≥ −D(p‖r) − Σ_x p(x) Σ_y W(x,y) ln(s(y)/q_k(y))`, `s` the
//! marginal of `r`. Every inner iterate therefore increases the proximal
//! objective, and the fixed point is the same.

use crate::diagnostics::penalty;
use crate::error::{CapacityError, Result};
use crate::prob::{marginal_into, xlogy, ProbVec, TransitionMatrix};

use super::classical::exponentiated_step;
use super::line_search::golden_section_max;
use super::strategy::{CapacityIteration, StepOutcome};

/// Best probed `φ` at or below this counts as "already optimal".
pub const PHI_FLOOR: f64 = 1e-30;

/// Bracketing scan resolution, in decades.
const SCAN_STEP_DECADES: f64 = 0.25;

/// Consecutive growing inner steps that count as divergence.
const MAX_EXPANSIONS: usize = 5;

/// Search interval and tolerance (in log10 units) for the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        Self {
            lo: 1e-2,
            hi: 1e2,
            tol: 1e-6,
        }
    }
}

impl LambdaSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(CapacityError::InvalidParameter(format!(
                "step-size search interval [{}, {}] must satisfy 0 < lo < hi < inf",
                self.lo, self.hi
            )));
        }
        if !(self.tol > 0.0) {
            return Err(CapacityError::InvalidParameter(format!(
                "step-size search tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximalSettings {
    pub search: LambdaSearch,
    /// L1 threshold on successive inner iterates.
    pub inner_tolerance: f64,
    pub inner_max_iterations: usize,
}

impl Default for ProximalSettings {
    fn default() -> Self {
        Self {
            search: LambdaSearch::default(),
            inner_tolerance: 1e-12,
            inner_max_iterations: 100,
        }
    }
}

impl ProximalSettings {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if !(self.inner_tolerance > 0.0) || self.inner_max_iterations == 0 {
            return Err(CapacityError::InvalidParameter(format!(
                "inner tolerance {} and iteration cap {} must be positive",
                self.inner_tolerance, self.inner_max_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximalStep {
    pub prior: ProbVec,
    pub inner_iterations: usize,
    /// Whether the inner L1 threshold was reached before the iteration cap.
    pub converged: bool,
}

/// Flags divergence when the inner step length grows too many times in a row.
#[derive(Debug, Default)]
pub(crate) struct ContractionMonitor {
    previous: Option<f64>,
    expansions: usize,
}

impl ContractionMonitor {
    /// Records a step length; `false` once the loop is judged divergent.
    pub(crate) fn observe(&mut self, delta: f64) -> bool {
        if !delta.is_finite() {
            return false;
        }
        match self.previous {
            Some(prev) if delta > prev => self.expansions += 1,
            _ => self.expansions = 0,
        }
        self.previous = Some(delta);
        self.expansions < MAX_EXPANSIONS
    }
}

/// Solves the implicit proximal update for a fixed `lambda`.
///
/// Errors with [`CapacityError::Numerical`] when the inner loop stops
/// contracting; reaching `inner_max` without meeting `inner_tol` is not an
/// error (the iterate still improves the proximal objective).
pub fn proximal_step(
    p: &ProbVec,
    channel: &TransitionMatrix,
    lambda: f64,
    inner_tol: f64,
    inner_max: usize,
) -> Result<ProximalStep> {
    if p.len() != channel.input_size() {
        return Err(CapacityError::Dimension {
            expected: channel.input_size(),
            found: p.len(),
        });
    }
    p.require_strictly_positive()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CapacityError::InvalidParameter(format!(
            "step size must be positive and finite, got {lambda}"
        )));
    }

    let inputs = channel.input_size();
    let outputs = channel.output_size();
    let neg_entropy = channel.row_neg_entropy();
    let damping = lambda.min(1.0);

    let mut q_ref = vec![0.0; outputs];
    marginal_into(p.as_slice(), channel, &mut q_ref);
    let ln_q_ref: Vec<f64> = q_ref.iter().map(|v| v.ln()).collect();
    // sum_y W(x,y) ln q_k(y)
    let cross_ref: Vec<f64> = channel
        .rows()
        .map(|row| {
            row.iter()
                .zip(&ln_q_ref)
                .map(|(&w, &l)| if w == 0.0 { 0.0 } else { w * l })
                .sum()
        })
        .collect();
    let ln_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();

    let mut current = p.as_slice().to_vec();
    let mut s = vec![0.0; outputs];
    let mut log_weights = vec![0.0; inputs];
    let mut monitor = ContractionMonitor::default();

    for t in 1..=inner_max {
        marginal_into(&current, channel, &mut s);
        for (x, row) in channel.rows().enumerate() {
            let cross: f64 = row.iter().zip(&s).map(|(&w, &sy)| xlogy(w, sy)).sum();
            let shift = cross - cross_ref[x];
            let divergence = neg_entropy[x] - cross;
            let log_target = ln_p[x] + shift + divergence / lambda;
            log_weights[x] = if damping < 1.0 {
                (1.0 - damping) * current[x].ln() + damping * log_target
            } else {
                log_target
            };
        }
        let next = ProbVec::from_log_weights(&log_weights)?.into_vec();
        let delta: f64 = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).sum();
        current = next;
        if !monitor.observe(delta) {
            return Err(CapacityError::Numerical(format!(
                "proximal inner iteration diverged at lambda = {lambda} (inner step {t})"
            )));
        }
        if delta < inner_tol {
            return Ok(ProximalStep {
                prior: ProbVec::from_weights(current)?,
                inner_iterations: t,
                converged: true,
            });
        }
    }
    Ok(ProximalStep {
        prior: ProbVec::from_weights(current)?,
        inner_iterations: inner_max,
        converged: false,
    })
}

/// Outcome of the step-size search, including the step it selected.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    /// `λ · penalty` at the selected step.
    pub phi: f64,
    pub step: ProximalStep,
    /// Number of proximal steps solved during the search.
    pub probes: usize,
}

/// `φ(λ) = λ (D(p_λ‖p_k) − D(q_λ‖q_k))` with `p_λ` the proximal step.
pub fn phi(
    p_k: &ProbVec,
    channel: &TransitionMatrix,
    lambda: f64,
    settings: &ProximalSettings,
) -> Result<f64> {
    let step = proximal_step(
        p_k,
        channel,
        lambda,
        settings.inner_tolerance,
        settings.inner_max_iterations,
    )?;
    Ok(lambda * penalty(&step.prior, p_k, channel)?)
}

/// Maximizes `φ` over `[lo, hi]`: a quarter-decade scan (which includes
/// `λ = 1` when in range) brackets the peak, then golden-section search on
/// `log10 λ` refines it. Returns `λ = 1` when no probe has `φ` above
/// [`PHI_FLOOR`].
pub fn search_lambda(
    p_k: &ProbVec,
    channel: &TransitionMatrix,
    settings: &ProximalSettings,
) -> Result<LambdaChoice> {
    settings.validate()?;
    p_k.require_strictly_positive()?;
    let LambdaSearch { lo, hi, tol } = settings.search;
    let (t_lo, t_hi) = (lo.log10(), hi.log10());

    let mut best: Option<(f64, f64, ProximalStep)> = None;
    let mut probes = 0usize;
    let mut last_error = None;
    let mut probe = |t: f64, best: &mut Option<(f64, f64, ProximalStep)>| -> f64 {
        let lambda = 10f64.powf(t);
        probes += 1;
        let evaluated = proximal_step(
            p_k,
            channel,
            lambda,
            settings.inner_tolerance,
            settings.inner_max_iterations,
        )
        .and_then(|step| Ok((lambda * penalty(&step.prior, p_k, channel)?, step)));
        match evaluated {
            Ok((value, step)) if value.is_finite() => {
                if best.as_ref().is_none_or(|b| value > b.1) {
                    *best = Some((lambda, value, step));
                }
                value
            }
            Ok(_) => f64::NEG_INFINITY,
            Err(err) => {
                last_error = Some(err);
                f64::NEG_INFINITY
            }
        }
    };

    let steps = ((t_hi - t_lo) / SCAN_STEP_DECADES).ceil().max(2.0) as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / steps as f64)
        .collect();
    if t_lo < 0.0 && t_hi > 0.0 && !grid.contains(&0.0) {
        grid.push(0.0);
        grid.sort_by(f64::total_cmp);
    }
    let values: Vec<f64> = grid.iter().map(|&t| probe(t, &mut best)).collect();
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    if values[peak].is_finite() && values[peak] > PHI_FLOOR {
        let left = grid[peak.saturating_sub(1)];
        let right = grid[(peak + 1).min(grid.len() - 1)];
        golden_section_max(|t| probe(t, &mut best), left, right, tol);
    }

    match best {
        Some((lambda, value, step)) if value > PHI_FLOOR => Ok(LambdaChoice {
            lambda,
            phi: value,
            step,
            probes,
        }),
        None => Err(last_error.unwrap_or_else(|| {
            CapacityError::Numerical("no step-size probe produced a finite objective".into())
        })),
        Some(_) => {
            // already optimal
            let step = proximal_step(
                p_k,
                channel,
                1.0,
                settings.inner_tolerance,
                settings.inner_max_iterations,
            )?;
            let value = penalty(&step.prior, p_k, channel)?;
            Ok(LambdaChoice {
                lambda: 1.0,
                phi: value,
                step,
                probes: probes + 1,
            })
        }
    }
}

/// The step size maximizing `φ(λ)`; see [`search_lambda`].
pub fn select_lambda(
    p_k: &ProbVec,
    channel: &TransitionMatrix,
    search: LambdaSearch,
) -> Result<f64> {
    let settings = ProximalSettings {
        search,
        ..ProximalSettings::default()
    };
    Ok(search_lambda(p_k, channel, &settings)?.lambda)
}

#[derive(Debug, Clone)]
pub struct Proximal {
    settings: ProximalSettings,
}

impl Proximal {
    pub fn new(settings: ProximalSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self { settings })
    }

    pub fn settings(&self) -> &ProximalSettings {
        &self.settings
    }
}

impl CapacityIteration for Proximal {
    fn name(&self) -> &'static str {
        "proximal"
    }

    fn step(
        &self,
        prior: &ProbVec,
        channel: &TransitionMatrix,
        _iteration: usize,
    ) -> Result<StepOutcome> {
        match search_lambda(prior, channel, &self.settings) {
            Ok(choice) => Ok(StepOutcome {
                prior: choice.step.prior,
                lambda: choice.lambda,
                inner_iterations: choice.step.inner_iterations,
                fallback: false,
            }),
            // every probe diverged: explicit step at the search's default size
            Err(CapacityError::Numerical(_)) => Ok(StepOutcome {
                prior: exponentiated_step(prior, channel, 1.0)?,
                lambda: 1.0,
                inner_iterations: 0,
                fallback: true,
            }),
            Err(err) => Err(err),
        }
    }
}
