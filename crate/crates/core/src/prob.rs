//! Finite-alphabet probability primitives.
//!
//! Everything here works in nats. Conversions to bits happen at reporting
//! boundaries through [`nats_to_bits`].

use std::fmt;
use std::ops::Index;

use crate::error::{CapacityError, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Divides by the sum unless it is already 1 up to accumulated rounding.
///
/// The skip threshold makes the operation idempotent: a vector that came out
/// of this function comes out unchanged the second time.
pub(crate) fn renormalize(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    let slack = 4.0 * values.len() as f64 * f64::EPSILON;
    if (sum - 1.0).abs() > slack {
        values.iter_mut().for_each(|v| *v /= sum);
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    /// Validates and renormalizes; the sum must be within [`SIMPLEX_TOLERANCE`] of 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, SIMPLEX_TOLERANCE)
    }

    pub fn with_tolerance(mut values: Vec<f64>, tolerance: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(CapacityError::AlphabetTooSmall(0));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(CapacityError::InvalidEntry { index, value });
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(CapacityError::NotNormalized { sum });
        }
        renormalize(&mut values);
        Ok(Self(values))
    }

    /// Normalizes arbitrary nonnegative weights with a positive, finite total.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(CapacityError::InvalidEntry { index, value });
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(CapacityError::NotNormalized { sum });
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        renormalize(&mut weights);
        Ok(Self(weights))
    }

    /// Normalizes `exp(log_weights)` after shifting by the maximum exponent.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(CapacityError::Numerical(format!(
                "log-weights have no finite maximum ({max})"
            )));
        }
        Self::from_weights(log_weights.iter().map(|w| (w - max).exp()).collect())
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform distribution needs a nonempty alphabet");
        Self(vec![1.0 / size as f64; size])
    }

    /// Point mass on `index`.
    pub fn degenerate(size: usize, index: usize) -> Self {
        let mut values = vec![0.0; size];
        values[index] = 1.0;
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub(crate) fn require_strictly_positive(&self) -> Result<()> {
        match self.0.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            Some((index, &value)) => Err(CapacityError::NonPositivePrior { index, value }),
            None => Ok(()),
        }
    }

    /// L1 distance.
    pub fn l1_distance(&self, other: &ProbVec) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl Index<usize> for ProbVec {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl fmt::Display for ProbVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Row-stochastic channel law: row `j` is `p(y | x = x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Vec<f64>,
    input_size: usize,
    output_size: usize,
    // sum_y W(x,y) ln W(x,y) per row, cached for the surprisal computations
    neg_entropy: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from already validated rows. All rows must share one length.
    pub fn from_rows(rows: Vec<ProbVec>) -> Result<Self> {
        let input_size = rows.len();
        if input_size < 2 {
            return Err(CapacityError::AlphabetTooSmall(input_size));
        }
        let output_size = rows[0].len();
        if output_size < 2 {
            return Err(CapacityError::AlphabetTooSmall(output_size));
        }
        let mut entries = Vec::with_capacity(input_size * output_size);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != output_size {
                return Err(CapacityError::Ragged {
                    row,
                    expected: output_size,
                    found: values.len(),
                });
            }
            entries.extend(values.into_vec());
        }
        let neg_entropy = entries
            .chunks_exact(output_size)
            .map(|row| row.iter().map(|&w| xlogy(w, w)).sum())
            .collect();
        Ok(Self {
            entries,
            input_size,
            output_size,
            neg_entropy,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, input: usize) -> &[f64] {
        let start = input * self.output_size;
        &self.entries[start..start + self.output_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.output_size)
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.entries[input * self.output_size + output]
    }

    /// `sum_y W(x,y) ln W(x,y)` for every input `x`.
    pub fn row_neg_entropy(&self) -> &[f64] {
        &self.neg_entropy
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Per-input divergence `D(W_x || q)` against a reference output marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurprisalVec(Vec<f64>);

impl SurprisalVec {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sum_x p(x) D_x`.
    pub fn expectation(&self, p: &ProbVec) -> f64 {
        self.0.iter().zip(p.iter()).map(|(d, w)| w * d).sum()
    }
}

impl Index<usize> for SurprisalVec {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

/// `x ln y` with `0 ln y = 0`.
#[inline]
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `(1 + d) ln(1 + d) − d`, accurate for small `d`.
#[inline]
fn bregman_log(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        let d2 = d * d;
        d2 * (0.5 - d / 6.0 + d2 / 12.0 - d2 * d / 20.0)
    } else {
        (1.0 + d) * d.ln_1p() - d
    }
}

/// Relative entropy on raw slices; `+inf` when `q` fails to dominate `p`.
///
/// Summed as `Σ_i [p_i ln(p_i/q_i) − p_i + q_i]`, which equals the usual sum
/// for normalized inputs but has nonnegative terms, so nearby distributions
/// keep full relative precision instead of cancelling.
pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            total += b;
        } else if b == 0.0 {
            return f64::INFINITY;
        } else {
            total += b * bregman_log((a - b) / b);
        }
    }
    total.max(0.0)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CapacityError::Dimension { expected, found })
    }
}

/// `D(p || q)` in nats. Returns `+inf` (not an error) when some `p(x) > 0` has `q(x) = 0`.
pub fn kl_divergence(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn marginal_into(p: &[f64], channel: &TransitionMatrix, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (&weight, row) in p.iter().zip(channel.rows()) {
        if weight == 0.0 {
            continue;
        }
        for (acc, &w) in out.iter_mut().zip(row) {
            *acc += weight * w;
        }
    }
}

/// `q(y) = sum_x p(x) W(x, y)`.
pub fn output_marginal(p: &ProbVec, channel: &TransitionMatrix) -> Result<ProbVec> {
    check_len(channel.input_size(), p.len())?;
    let mut q = vec![0.0; channel.output_size()];
    marginal_into(p.as_slice(), channel, &mut q);
    renormalize(&mut q);
    Ok(ProbVec(q))
}

pub(crate) fn surprisal_into(channel: &TransitionMatrix, q: &[f64], out: &mut [f64]) -> Result<()> {
    for (j, (row, slot)) in channel.rows().zip(out.iter_mut()).enumerate() {
        let d = kl_slices(row, q);
        if !d.is_finite() {
            return Err(CapacityError::Domination { row: j });
        }
        *slot = d;
    }
    Ok(())
}

/// `D_x = D(W_x || q)` for every input symbol; fails if `q` does not dominate a row.
pub fn surprisal_vector(channel: &TransitionMatrix, q: &ProbVec) -> Result<SurprisalVec> {
    check_len(channel.output_size(), q.len())?;
    let mut d = vec![0.0; channel.input_size()];
    surprisal_into(channel, q.as_slice(), &mut d)?;
    Ok(SurprisalVec(d))
}

/// `I(p, W) = sum_x p(x) D(W_x || q)` with `q` the induced output marginal.
pub fn mutual_information(p: &ProbVec, channel: &TransitionMatrix) -> Result<f64> {
    let q = output_marginal(p, channel)?;
    let mut total = 0.0;
    for (&weight, row) in p.iter().zip(channel.rows()) {
        if weight == 0.0 {
            continue;
        }
        // a row with positive weight is always dominated by its own marginal
        total += weight * kl_slices(row, q.as_slice());
    }
    Ok(total.max(0.0))
}

/// Lower and upper capacity bounds at a prior, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl CapacityBounds {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `lower = I(p, W)`, `upper = max_x D(W_x || q)`; `lower <= C <= upper`.
pub fn capacity_bounds(p: &ProbVec, channel: &TransitionMatrix) -> Result<CapacityBounds> {
    check_len(channel.input_size(), p.len())?;
    p.require_strictly_positive()?;
    let q = output_marginal(p, channel)?;
    let d = surprisal_vector(channel, &q)?;
    let lower = d.expectation(p).max(0.0);
    // the maximum can fall below the average by rounding only
    let upper = d.max().max(lower);
    Ok(CapacityBounds { lower, upper })
}
