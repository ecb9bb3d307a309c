//! Executable checks of the information-geometric identities behind the
//! solvers, a brute-force capacity oracle for small input alphabets, and a
//! seeded sweep that summarizes each identity as an [`IdentityReport`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CapacityError, Result};
use crate::prob::{
    kl_divergence, mutual_information, output_marginal, surprisal_vector, ProbVec, TransitionMatrix,
};
use crate::solvers::{classical_step, proximal_step};

/// `D(p‖p_ref) − D(q‖q_ref)`, `q` and `q_ref` the induced output marginals.
///
/// Nonnegative by Jensen's inequality (data processing).
pub fn penalty(p: &ProbVec, p_ref: &ProbVec, channel: &TransitionMatrix) -> Result<f64> {
    p_ref.require_strictly_positive()?;
    let q = output_marginal(p, channel)?;
    let q_ref = output_marginal(p_ref, channel)?;
    let input_term = kl_divergence(p, p_ref)?;
    let output_term = kl_divergence(&q, &q_ref)?;
    if !output_term.is_finite() {
        return Err(CapacityError::Domination { row: 0 });
    }
    Ok(input_term - output_term)
}

/// `|I(p) − (Σ_x p(x) D(W_x‖q_ref) − D(q‖q_ref))|`.
pub fn decomposition_residual(
    p: &ProbVec,
    p_ref: &ProbVec,
    channel: &TransitionMatrix,
) -> Result<f64> {
    let q = output_marginal(p, channel)?;
    let q_ref = output_marginal(p_ref, channel)?;
    let stale = surprisal_vector(channel, &q_ref)?;
    let correction = kl_divergence(&q, &q_ref)?;
    let direct = mutual_information(p, channel)?;
    Ok((direct - (stale.expectation(p) - correction)).abs())
}

/// Residual of `E_{p_next}[D^k] = ln Σ_x p_k(x) e^{D_x^k} + D(p_next‖p_k)`
/// for `p_next` the classical update of `p_k`.
pub fn projection_residual(
    p_next: &ProbVec,
    p_k: &ProbVec,
    channel: &TransitionMatrix,
) -> Result<f64> {
    let q_k = output_marginal(p_k, channel)?;
    let d = surprisal_vector(channel, &q_k)?;
    let expected = d.expectation(p_next);
    let max = d.max();
    let log_normalizer = max
        + p_k
            .iter()
            .zip(d.as_slice())
            .map(|(w, dx)| w * (dx - max).exp())
            .sum::<f64>()
            .ln();
    let divergence = kl_divergence(p_next, p_k)?;
    Ok((expected - (log_normalizer + divergence)).abs())
}

/// `I^k(p) − D(p‖p_k)`, the objective the classical update maximizes.
pub fn classical_objective(p: &ProbVec, p_k: &ProbVec, channel: &TransitionMatrix) -> Result<f64> {
    let q_k = output_marginal(p_k, channel)?;
    let d = surprisal_vector(channel, &q_k)?;
    Ok(d.expectation(p) - kl_divergence(p, p_k)?)
}

/// Brute-force capacity by grid search over the simplex, then one 10x finer
/// grid around the best point. Only for 2 or 3 inputs.
pub fn capacity_oracle(channel: &TransitionMatrix, grid_points: usize) -> Result<f64> {
    if grid_points < 100 {
        return Err(CapacityError::InvalidParameter(format!(
            "oracle grid needs at least 100 points, got {grid_points}"
        )));
    }
    let g = grid_points as f64;
    let mi = |weights: Vec<f64>| -> f64 {
        ProbVec::from_weights(weights)
            .and_then(|p| mutual_information(&p, channel))
            .unwrap_or(f64::NEG_INFINITY)
    };
    match channel.input_size() {
        2 => {
            let coarse = (0..=grid_points)
                .map(|i| (i, mi(vec![i as f64 / g, 1.0 - i as f64 / g])))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("grid is nonempty");
            let center = coarse.0 as f64 / g;
            let fine = (-10i32..=10)
                .map(|u| (center + u as f64 / (10.0 * g)).clamp(0.0, 1.0))
                .map(|a| mi(vec![a, 1.0 - a]))
                .fold(coarse.1, f64::max);
            Ok(fine)
        }
        3 => {
            let mut best = ((0usize, 0usize), f64::NEG_INFINITY);
            for i in 0..=grid_points {
                for j in 0..=grid_points - i {
                    let a = i as f64 / g;
                    let b = j as f64 / g;
                    let value = mi(vec![a, b, (1.0 - a - b).max(0.0)]);
                    if value > best.1 {
                        best = ((i, j), value);
                    }
                }
            }
            let (ci, cj) = (best.0 .0 as f64 / g, best.0 .1 as f64 / g);
            let mut value = best.1;
            for u in -10i32..=10 {
                for v in -10i32..=10 {
                    let a = ci + u as f64 / (10.0 * g);
                    let b = cj + v as f64 / (10.0 * g);
                    if a < 0.0 || b < 0.0 || a + b > 1.0 {
                        continue;
                    }
                    value = value.max(mi(vec![a, b, (1.0 - a - b).max(0.0)]));
                }
            }
            Ok(value)
        }
        n => Err(CapacityError::InvalidParameter(format!(
            "oracle supports 2 or 3 inputs, channel has {n}"
        ))),
    }
}

/// Uniform draw from the simplex (normalized exponential spacings); every entry is positive.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, size: usize) -> ProbVec {
    let weights: Vec<f64> = (0..size).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    ProbVec::from_weights(weights).expect("exponential spacings are positive")
}

/// Channel with independent uniform-simplex rows.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    inputs: usize,
    outputs: usize,
) -> TransitionMatrix {
    TransitionMatrix::from_rows((0..inputs).map(|_| random_simplex(rng, outputs)).collect())
        .expect("random rows are valid")
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(point: &[f64]) -> Vec<f64> {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if value - candidate > 0.0 {
            theta = candidate;
        }
    }
    point.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Summary of one identity checked over many samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: &'static str,
    pub max_violation: f64,
    pub threshold: f64,
    pub samples: usize,
    pub passed: bool,
    pub seed: u64,
    /// Inputs of the worst sample.
    pub witness: Option<String>,
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:<4} max_violation={:.3e} threshold={:.1e} samples={} seed={}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_violation,
            self.threshold,
            self.samples,
            self.seed
        )
    }
}

struct Tracker {
    name: &'static str,
    threshold: f64,
    seed: u64,
    samples: usize,
    worst: f64,
    witness: Option<String>,
}

impl Tracker {
    fn new(name: &'static str, threshold: f64, seed: u64) -> Self {
        Self {
            name,
            threshold,
            seed,
            samples: 0,
            worst: 0.0,
            witness: None,
        }
    }

    fn record(&mut self, violation: f64, witness: impl FnOnce() -> String) {
        self.samples += 1;
        let violation = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation
        };
        if violation > self.worst || self.witness.is_none() {
            self.worst = self.worst.max(violation);
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> IdentityReport {
        IdentityReport {
            name: self.name,
            max_violation: self.worst,
            threshold: self.threshold,
            samples: self.samples,
            passed: self.worst <= self.threshold,
            seed: self.seed,
            witness: self.witness,
        }
    }
}

/// Largest random channel used by the sweep.
pub const MAX_SWEEP_INPUTS: usize = 10;
pub const MAX_SWEEP_OUTPUTS: usize = 40;
/// Perturbations per sample in the classical-objective check.
pub const PERTURBATIONS: usize = 200;

fn describe(sample: usize, channel: &TransitionMatrix, vectors: &[(&str, &ProbVec)]) -> String {
    let mut out = format!(
        "sample {sample}, channel {}x{}",
        channel.input_size(),
        channel.output_size()
    );
    for (name, v) in vectors {
        out.push_str(&format!(", {name}={v}"));
    }
    out
}

/// Runs every identity on `samples` random (p, p_ref, W) triples drawn from
/// a ChaCha8 stream seeded with `seed`; channels range up to 10x40.
pub fn identity_suite(samples: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    if samples == 0 {
        return Err(CapacityError::InvalidParameter(
            "need at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jensen = Tracker::new("penalty-nonnegative", 1e-12, seed);
    let mut decomposition = Tracker::new("mutual-info-decomposition", 1e-11, seed);
    let mut double_sum = Tracker::new("mutual-info-double-sum", 1e-12, seed);
    let mut projection = Tracker::new("projection-identity", 1e-10, seed);
    let mut optimality = Tracker::new("classical-step-optimality", 1e-12, seed);
    let mut improvement = Tracker::new("proximal-improvement-bound", 1e-10, seed);

    for sample in 0..samples {
        let inputs = rng.gen_range(2..=MAX_SWEEP_INPUTS);
        let outputs = rng.gen_range(2..=MAX_SWEEP_OUTPUTS);
        let channel = random_channel(&mut rng, inputs, outputs);
        let p = random_simplex(&mut rng, inputs);
        let p_ref = random_simplex(&mut rng, inputs);
        let witness = |extra: &[(&str, &ProbVec)]| {
            let mut all = vec![("p", &p), ("p_ref", &p_ref)];
            all.extend_from_slice(extra);
            describe(sample, &channel, &all)
        };

        let pen = penalty(&p, &p_ref, &channel)?;
        jensen.record((-pen).max(0.0), || witness(&[]));

        let residual = decomposition_residual(&p, &p_ref, &channel)?;
        decomposition.record(residual, || witness(&[]));

        let q = output_marginal(&p, &channel)?;
        let direct = mutual_information(&p, &channel)?;
        let mut sum = 0.0;
        for (x, row) in channel.rows().enumerate() {
            for (y, &w) in row.iter().enumerate() {
                if p[x] > 0.0 && w > 0.0 {
                    sum += p[x] * w * (w / q[y]).ln();
                }
            }
        }
        double_sum.record((direct - sum).abs(), || witness(&[]));

        let next = classical_step(&p_ref, &channel)?;
        let residual = projection_residual(&next, &p_ref, &channel)?;
        projection.record(residual, || witness(&[("p_next", &next)]));

        let at_step = classical_objective(&next, &p_ref, &channel)?;
        let mut worst = 0.0f64;
        let mut worst_point = None;
        for _ in 0..PERTURBATIONS {
            let scale = 10f64.powf(rng.gen_range(-6.0..-1.0));
            let moved: Vec<f64> = next
                .iter()
                .map(|v| v + scale * rng.gen_range(-1.0..1.0))
                .collect();
            let candidate = ProbVec::from_weights(project_to_simplex(&moved))?;
            let value = classical_objective(&candidate, &p_ref, &channel)?;
            if value - at_step > worst {
                worst = value - at_step;
                worst_point = Some(candidate);
            }
        }
        optimality.record(worst, || match &worst_point {
            Some(c) => witness(&[("p_next", &next), ("perturbed", c)]),
            None => witness(&[("p_next", &next)]),
        });

        let lambda = 10f64.powf(rng.gen_range(-2.0..2.0));
        let step = proximal_step(&p_ref, &channel, lambda, 1e-12, 100)?;
        let gain =
            mutual_information(&step.prior, &channel)? - mutual_information(&p_ref, &channel)?;
        let bound = lambda * penalty(&step.prior, &p_ref, &channel)?;
        improvement.record((bound - gain).max(0.0), || {
            format!("{}, lambda={lambda}", witness(&[("p_next", &step.prior)]))
        });
    }

    Ok([
        jensen,
        decomposition,
        double_sum,
        projection,
        optimality,
        improvement,
    ]
    .into_iter()
    .map(Tracker::finish)
    .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels;

    fn pv(v: &[f64]) -> ProbVec {
        ProbVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn penalty_examples() {
        let w = channels::dbsc();
        let p = pv(&[0.3, 0.7]);
        assert_eq!(penalty(&p, &p, &w).unwrap(), 0.0);

        let row = pv(&[0.2, 0.5, 0.3]);
        let flat = TransitionMatrix::from_rows(vec![row.clone(), row.clone(), row]).unwrap();
        let a = pv(&[0.1, 0.6, 0.3]);
        let b = pv(&[0.4, 0.4, 0.2]);
        let expected = kl_divergence(&a, &b).unwrap();
        assert!((penalty(&a, &b, &flat).unwrap() - expected).abs() < 1e-15);
        assert!(expected > 0.0);
    }

    #[test]
    fn penalty_requires_positive_reference() {
        let w = channels::dbsc();
        assert!(penalty(&pv(&[0.5, 0.5]), &pv(&[1.0, 0.0]), &w).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let w = channels::bsc(0.3).unwrap();
        let p = pv(&[0.35, 0.65]);
        assert!(decomposition_residual(&p, &p, &w).unwrap() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = random_simplex(&mut rng, 2);
            let r = random_simplex(&mut rng, 2);
            assert!(decomposition_residual(&p, &r, &w).unwrap() <= 1e-12);
        }
        let bg =
            channels::bernoulli_gaussian_channel(&channels::BernoulliGaussianParams::benchmark())
                .unwrap();
        for _ in 0..100 {
            let p = random_simplex(&mut rng, 10);
            let r = random_simplex(&mut rng, 10);
            assert!(decomposition_residual(&p, &r, &bg).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn projection_examples() {
        let bsc = channels::bsc(0.1).unwrap();
        let u = ProbVec::uniform(2);
        let next = classical_step(&u, &bsc).unwrap();
        assert!(projection_residual(&next, &u, &bsc).unwrap() <= 1e-12);

        let p = pv(&[0.9, 0.1]);
        let next = classical_step(&p, &bsc).unwrap();
        assert!(projection_residual(&next, &p, &bsc).unwrap() <= 1e-10);

        let w = channels::dbsc();
        let next = classical_step(&u, &w).unwrap();
        assert!(projection_residual(&next, &u, &w).unwrap() <= 1e-12);
    }

    #[test]
    fn oracle_examples() {
        // ln 2 − H(0.1)
        let c = capacity_oracle(&channels::bsc(0.1).unwrap(), 10_000).unwrap();
        assert!((c - 0.368_064_207_168_497_1).abs() < 1e-6);

        let c = capacity_oracle(&channels::dbsc(), 10_000).unwrap();
        assert!((c - 0.253_101_615_442_806_8).abs() < 1e-6);

        let row = pv(&[0.2, 0.8]);
        let flat = TransitionMatrix::from_rows(vec![row.clone(), row]).unwrap();
        assert!(capacity_oracle(&flat, 1000).unwrap() < 1e-15);
    }

    #[test]
    fn oracle_three_inputs() {
        // noiseless ternary channel: ln 3 at the uniform prior
        let id3 = channels::from_matrix(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let c = capacity_oracle(&id3, 300).unwrap();
        assert!((c - 3f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn oracle_errors() {
        let big =
            channels::bernoulli_gaussian_channel(&channels::BernoulliGaussianParams::benchmark())
                .unwrap();
        assert!(capacity_oracle(&big, 1000).is_err());
        assert!(capacity_oracle(&channels::dbsc(), 10).is_err());
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[0.6, 0.6, -0.1]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let inside = [0.2, 0.3, 0.5];
        let p = project_to_simplex(&inside);
        for (a, b) in p.iter().zip(inside) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let a = identity_suite(20, 42).unwrap();
        let b = identity_suite(20, 42).unwrap();
        assert_eq!(a, b);
        for report in &a {
            assert!(report.passed, "{report}");
            assert_eq!(report.samples, 20);
        }
        assert!(identity_suite(0, 1).is_err());
        let single = identity_suite(1, 9).unwrap();
        assert!(single.iter().all(|r| r.samples == 1));
    }
}
