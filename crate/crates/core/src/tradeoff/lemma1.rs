//! Randomized checker for `det(I + K_s)^{1/n} ≤ 1 + Σ_k Σ_ℓ √(P_k P_ℓ)`.
//!
//! Each instance draws `M` joint samples of `(x_1, …, x_K)` and treats their
//! empirical distribution as the random vectors: powers are rescaled to meet
//! `(1/n)·E[x_k^H x_k] ≤ P_k` under that distribution and `K_s` is the
//! empirical covariance with divisor `M`. The inequality is then a statement
//! about an exact distribution, so any violation beyond rounding is a real one.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, stream_rng, Purpose};

pub const LEMMA1_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorModel {
    Gaussian,
    Uniform,
    /// A fixed vector: zero covariance.
    Deterministic,
    /// A scaled copy of one Gaussian vector shared by every user, the worst case for the cross terms.
    Correlated,
}

const MODELS: [VectorModel; 4] = [
    VectorModel::Gaussian,
    VectorModel::Uniform,
    VectorModel::Deterministic,
    VectorModel::Correlated,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub trials: usize,
    pub passed: usize,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
}

impl Lemma1Report {
    pub fn all_pass(&self) -> bool {
        self.passed == self.trials
    }
}

/// `(lhs, rhs)` for one instance built from `samples` joint draws.
pub fn lemma1_instance<R: Rng + ?Sized>(
    n: usize,
    powers: &[f64],
    models: &[VectorModel],
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n < 1 || powers.is_empty() || samples < 1 {
        return Err(Error::param("lemma1", "need n >= 1, K >= 1 and at least one sample"));
    }
    if models.len() != powers.len() {
        return Err(Error::DimensionMismatch("one vector model per user".into()));
    }
    if let Some(p) = powers.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(Error::param("P_k", format!("must be non-negative, got {p}")));
    }
    let shared: Vec<DVector<Complex64>> = (0..samples)
        .map(|_| DVector::from_fn(n, |_, _| complex_gaussian(rng, 1.0)))
        .collect();
    let mut sum: Vec<DVector<Complex64>> = vec![DVector::zeros(n); samples];
    for (&power, &model) in powers.iter().zip(models) {
        let offset: f64 = rng.random_range(0.0..2.0);
        let mean = DVector::from_fn(n, |_, _| complex_gaussian(rng, offset));
        let weight = complex_gaussian(rng, 1.0);
        let mut draws: Vec<DVector<Complex64>> = (0..samples)
            .map(|m| match model {
                VectorModel::Gaussian => DVector::from_fn(n, |_, _| complex_gaussian(rng, 1.0)) + &mean,
                VectorModel::Uniform => {
                    DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        + &mean
                }
                VectorModel::Deterministic => mean.clone(),
                VectorModel::Correlated => &shared[m] * weight,
            })
            .collect();
        // Empirical (1/n)·E|x|², scaled to a random fraction of the budget.
        let energy: f64 = draws.iter().map(|x| x.norm_squared()).sum::<f64>() / (samples * n) as f64;
        let target = power * rng.random_range(0.5..=1.0);
        let scale = if energy > 0.0 { (target / energy).sqrt() } else { 0.0 };
        for (acc, x) in sum.iter_mut().zip(draws.iter_mut()) {
            *acc += &*x * Complex64::new(scale, 0.0);
        }
    }
    let mean = sum.iter().fold(DVector::zeros(n), |acc, s| acc + s) / Complex64::new(samples as f64, 0.0);
    let mut cov = DMatrix::<Complex64>::identity(n, n);
    for s in &sum {
        let d = s - &mean;
        cov += &d * d.adjoint() / Complex64::new(samples as f64, 0.0);
    }
    let chol = Cholesky::new(cov).ok_or_else(|| Error::DegenerateChannel("I + K_s is not positive definite".into()))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.norm().ln()).sum();
    let lhs = (log_det / n as f64).exp();
    let root_sum: f64 = powers.iter().map(|p| p.sqrt()).sum();
    Ok((lhs, 1.0 + root_sum * root_sum))
}

/// Runs `trials` instances with per-user models drawn at random and powers `p_vec` (length `K`).
pub fn lemma1_check(k: usize, n: usize, p_vec: &[f64], trials: usize, seed: u64) -> Result<Lemma1Report> {
    if k < 1 || trials < 1 {
        return Err(Error::param("lemma1", "K and trials must be at least 1"));
    }
    if p_vec.len() != k {
        return Err(Error::DimensionMismatch(format!("{} powers for K = {k}", p_vec.len())));
    }
    let samples = 16 + 8 * n;
    let mut report = Lemma1Report {
        trials,
        passed: 0,
        max_ratio: 0.0,
    };
    for t in 0..trials {
        let mut rng = stream_rng(seed, t as u64, Purpose::Lemma, (k * 16 + n) as u32);
        let models: Vec<VectorModel> = (0..k).map(|_| MODELS[rng.random_range(0..MODELS.len())]).collect();
        let (lhs, rhs) = lemma1_instance(n, p_vec, &models, samples, &mut rng)?;
        if lhs <= rhs + LEMMA1_SLACK {
            report.passed += 1;
        }
        report.max_ratio = report.max_ratio.max(lhs / rhs);
    }
    Ok(report)
}
