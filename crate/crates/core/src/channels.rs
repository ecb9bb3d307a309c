//! Channel constructors: validated matrices, binary symmetric channels, the
//! 2x3 doubly symmetric test channel and discretized Bernoulli-Gaussian noise.

use crate::error::{CapacityError, Result};
use crate::prob::{ProbVec, TransitionMatrix};

/// Row-sum tolerance accepted by [`from_matrix`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Validates a rectangular, nonnegative, row-stochastic matrix (rows = inputs).
pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<TransitionMatrix> {
    let width = rows.first().map_or(0, Vec::len);
    let mut validated = Vec::with_capacity(rows.len());
    for (r, row) in rows.into_iter().enumerate() {
        if row.len() != width {
            return Err(CapacityError::Ragged {
                row: r,
                expected: width,
                found: row.len(),
            });
        }
        if let Some((col, &value)) = row
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(CapacityError::InvalidMatrixEntry { row: r, col, value });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CapacityError::RowSum { row: r, sum });
        }
        validated.push(ProbVec::with_tolerance(row, ROW_SUM_TOLERANCE)?);
    }
    TransitionMatrix::from_rows(validated)
}

/// Binary symmetric channel with crossover probability `epsilon`.
pub fn bsc(epsilon: f64) -> Result<TransitionMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(CapacityError::InvalidParameter(format!(
            "crossover probability {epsilon} outside [0, 1]"
        )));
    }
    from_matrix(vec![
        vec![1.0 - epsilon, epsilon],
        vec![epsilon, 1.0 - epsilon],
    ])
}

/// The 2-input, 3-output symmetric channel used as the first benchmark.
pub fn dbsc() -> TransitionMatrix {
    from_matrix(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]])
        .expect("constant matrix is row-stochastic")
}

/// `Phi(x / sigma)`, the CDF of `N(0, sigma^2)` at `x`.
///
/// Evaluated as `erfc(-x / (sigma sqrt 2)) / 2` with the libm `erfc` (the
/// FreeBSD msun rational approximations, below one ulp relative error), so
/// the absolute error stays far under 1e-12 and the lower tail keeps its
/// relative precision.
pub fn gaussian_cdf(x: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CapacityError::InvalidParameter(format!(
            "standard deviation must be positive, got {sigma}"
        )));
    }
    Ok(0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2)))
}

// Upper tail 1 - Phi(x / sigma).
fn gaussian_sf(x: f64, sigma: f64) -> f64 {
    0.5 * libm::erfc(x / (sigma * std::f64::consts::SQRT_2))
}

/// Mass of `N(0, sigma^2)` on `[lo, hi]`, computed on whichever tail keeps precision.
fn interval_mass(lo: f64, hi: f64, sigma: f64) -> f64 {
    let mass = if lo >= 0.0 {
        gaussian_sf(lo, sigma) - gaussian_sf(hi, sigma)
    } else {
        let cdf = |x: f64| 0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2));
        cdf(hi) - cdf(lo)
    };
    mass.max(0.0)
}

/// Parameters of the discretized channel `y = x + n`, where
/// `n ~ (1 - p) N(0, sigma_b^2) + p N(0, sigma_b^2 + sigma_g^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliGaussianParams {
    pub p_impulse: f64,
    pub sigma_b: f64,
    pub sigma_g: f64,
    pub input_levels: usize,
    pub output_levels: usize,
    pub input_range: (f64, f64),
    pub output_range: (f64, f64),
}

impl BernoulliGaussianParams {
    /// 10 inputs on `[-1, 1]`, 40 output bins on `[-1 - 4 s, 1 + 4 s]` with
    /// `s = sqrt(sigma_b^2 + sigma_g^2)`.
    pub fn new(p_impulse: f64, sigma_b: f64, sigma_g: f64) -> Self {
        let sigma_max = sigma_b.hypot(sigma_g);
        Self {
            p_impulse,
            sigma_b,
            sigma_g,
            input_levels: 10,
            output_levels: 40,
            input_range: (-1.0, 1.0),
            output_range: (-1.0 - 4.0 * sigma_max, 1.0 + 4.0 * sigma_max),
        }
    }

    /// `p = 0.3, sigma_b = 0.01, sigma_g = 1` on the default grids.
    pub fn benchmark() -> Self {
        Self::new(0.3, 0.01, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CapacityError::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.p_impulse) {
            return bad(format!(
                "impulse probability {} outside [0, 1]",
                self.p_impulse
            ));
        }
        if !(self.sigma_b > 0.0 && self.sigma_b.is_finite()) {
            return bad(format!("sigma_b must be positive, got {}", self.sigma_b));
        }
        if !(self.sigma_g > 0.0 && self.sigma_g.is_finite()) {
            return bad(format!("sigma_g must be positive, got {}", self.sigma_g));
        }
        if self.sigma_b > self.sigma_g {
            return bad(format!(
                "sigma_b ({}) must not exceed sigma_g ({})",
                self.sigma_b, self.sigma_g
            ));
        }
        if self.input_levels < 2 || self.output_levels < 2 {
            return bad(format!(
                "need at least 2 input and 2 output levels, got {} and {}",
                self.input_levels, self.output_levels
            ));
        }
        for (name, (lo, hi)) in [("input", self.input_range), ("output", self.output_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("{name} range ({lo}, {hi}) is empty or not finite"));
            }
        }
        Ok(())
    }

    /// Input grid, endpoints included.
    pub fn input_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.input_range;
        let step = (hi - lo) / (self.input_levels - 1) as f64;
        (0..self.input_levels)
            .map(|j| {
                if j + 1 == self.input_levels {
                    hi
                } else {
                    lo + j as f64 * step
                }
            })
            .collect()
    }

    /// Output bin edges, `output_levels + 1` of them; the outer two are infinite.
    pub fn output_edges(&self) -> Vec<f64> {
        let (lo, hi) = self.output_range;
        let width = (hi - lo) / self.output_levels as f64;
        let mut edges: Vec<f64> = (0..=self.output_levels)
            .map(|i| lo + i as f64 * width)
            .collect();
        edges[0] = f64::NEG_INFINITY;
        edges[self.output_levels] = f64::INFINITY;
        edges
    }
}

/// Quantizes the Bernoulli-Gaussian channel; the extreme bins absorb the tails.
pub fn bernoulli_gaussian_channel(params: &BernoulliGaussianParams) -> Result<TransitionMatrix> {
    params.validate()?;
    let sigma_mix = params.sigma_b.hypot(params.sigma_g);
    let edges = params.output_edges();
    let p = params.p_impulse;
    let rows = params
        .input_grid()
        .into_iter()
        .map(|x| {
            edges
                .windows(2)
                .map(|bin| {
                    let (lo, hi) = (bin[0] - x, bin[1] - x);
                    (1.0 - p) * interval_mass(lo, hi, params.sigma_b)
                        + p * interval_mass(lo, hi, sigma_mix)
                })
                .collect()
        })
        .collect();
    from_matrix(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson rule for the standard normal density on [0, x].
    fn simpson_cdf(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(0.0) + f(x);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(k as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn from_matrix_examples() {
        let w = from_matrix(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]]).unwrap();
        assert_eq!((w.input_size(), w.output_size()), (2, 3));
        let id = from_matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id.row(1), &[0.0, 1.0]);
        let err = from_matrix(vec![vec![0.5, 0.5], vec![0.5, 0.6]]).unwrap_err();
        assert!(matches!(err, CapacityError::RowSum { row: 1, .. }));
    }

    #[test]
    fn from_matrix_rejects_negative_and_ragged() {
        assert!(matches!(
            from_matrix(vec![vec![1.2, -0.2], vec![0.5, 0.5]]),
            Err(CapacityError::InvalidMatrixEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            from_matrix(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(CapacityError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            from_matrix(vec![vec![1.0, 0.0]]),
            Err(CapacityError::AlphabetTooSmall(1))
        ));
    }

    #[test]
    fn from_matrix_renormalizes() {
        let w = from_matrix(vec![vec![0.5 + 5e-10, 0.5], vec![0.5, 0.5]]).unwrap();
        let sum: f64 = w.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bsc_shapes_and_errors() {
        let w = bsc(0.1).unwrap();
        assert_eq!(w.row(0), &[0.9, 0.1]);
        assert_eq!(w.row(1), &[0.1, 0.9]);
        assert!(bsc(-0.01).is_err());
        assert!(bsc(1.5).is_err());
        assert!(bsc(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_cdf_examples() {
        assert_eq!(gaussian_cdf(0.0, 1.0).unwrap(), 0.5);
        assert!((gaussian_cdf(40.0 * 2.5, 2.5).unwrap() - 1.0).abs() <= 1e-12);
        let oracle = simpson_cdf(1.0);
        assert!((oracle - 0.841_344_746_068_542_9).abs() < 1e-13);
        assert!((gaussian_cdf(1.0, 1.0).unwrap() - oracle).abs() <= 1e-12);
        assert!((gaussian_cdf(2.0, 2.0).unwrap() - oracle).abs() <= 1e-12);
        assert!(gaussian_cdf(1.0, 0.0).is_err());
        assert!(gaussian_cdf(1.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_cdf_matches_simpson_on_a_sweep() {
        for k in 1..=30 {
            let x = 0.2 * k as f64;
            let oracle = simpson_cdf(x);
            let got = gaussian_cdf(x, 1.0).unwrap();
            assert!((got - oracle).abs() <= 1e-12, "x={x}: {got} vs {oracle}");
            assert!((gaussian_cdf(-x, 1.0).unwrap() - (1.0 - oracle)).abs() <= 1e-12);
        }
    }

    #[test]
    fn bernoulli_gaussian_benchmark_shape() {
        let params = BernoulliGaussianParams::benchmark();
        let w = bernoulli_gaussian_channel(&params).unwrap();
        assert_eq!((w.input_size(), w.output_size()), (10, 40));
        let (lo, hi) = params.output_range;
        let width = (hi - lo) / 40.0;
        let centers: Vec<f64> = (0..40).map(|i| lo + (i as f64 + 0.5) * width).collect();
        for (j, x) in params.input_grid().into_iter().enumerate() {
            let row = w.row(j);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
            assert!(row.iter().all(|&v| v >= 0.0));
            // unimodal in bins, peak in the bin containing x
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let nearest = centers
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                .unwrap()
                .0;
            assert!(
                peak.abs_diff(nearest) <= 1,
                "row {j}: peak {peak}, nearest {nearest}"
            );
            assert!(row[..peak].windows(2).all(|p| p[0] <= p[1] + 1e-15));
            assert!(row[peak..].windows(2).all(|p| p[0] + 1e-15 >= p[1]));
        }
    }

    #[test]
    fn bernoulli_gaussian_degenerate_mixtures() {
        let mut params = BernoulliGaussianParams::benchmark();
        let edges = params.output_edges();
        let grid = params.input_grid();
        params.p_impulse = 0.0;
        let pure = bernoulli_gaussian_channel(&params).unwrap();
        params.p_impulse = 1.0;
        let wide = bernoulli_gaussian_channel(&params).unwrap();
        let sigma_mix = (0.01f64.powi(2) + 1.0).sqrt();
        for (j, &x) in grid.iter().enumerate() {
            for i in 0..40 {
                let direct = |s: f64| {
                    gaussian_cdf(edges[i + 1] - x, s).unwrap()
                        - gaussian_cdf(edges[i] - x, s).unwrap()
                };
                assert!((pure.get(j, i) - direct(0.01)).abs() < 1e-12);
                assert!((wide.get(j, i) - direct(sigma_mix)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bernoulli_gaussian_is_linear_in_impulse_probability() {
        let mut params = BernoulliGaussianParams::benchmark();
        params.p_impulse = 0.0;
        let c0 = bernoulli_gaussian_channel(&params).unwrap();
        params.p_impulse = 1.0;
        let c1 = bernoulli_gaussian_channel(&params).unwrap();
        for p in [0.1, 0.3, 0.77] {
            params.p_impulse = p;
            let c = bernoulli_gaussian_channel(&params).unwrap();
            for j in 0..10 {
                for i in 0..40 {
                    let mix = (1.0 - p) * c0.get(j, i) + p * c1.get(j, i);
                    assert!((c.get(j, i) - mix).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn bernoulli_gaussian_rejects_invalid_params() {
        let base = BernoulliGaussianParams::benchmark();
        let cases = [
            BernoulliGaussianParams {
                p_impulse: 1.5,
                ..base.clone()
            },
            BernoulliGaussianParams {
                sigma_b: 0.0,
                ..base.clone()
            },
            BernoulliGaussianParams {
                sigma_g: -1.0,
                ..base.clone()
            },
            BernoulliGaussianParams {
                sigma_b: 2.0,
                ..base.clone()
            },
            BernoulliGaussianParams {
                input_levels: 1,
                ..base.clone()
            },
            BernoulliGaussianParams {
                output_range: (1.0, 1.0),
                ..base.clone()
            },
        ];
        for params in cases {
            assert!(bernoulli_gaussian_channel(&params).is_err(), "{params:?}");
        }
    }

    #[test]
    fn input_grid_includes_endpoints() {
        let g = BernoulliGaussianParams::benchmark().input_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[9], 1.0);
    }
}
