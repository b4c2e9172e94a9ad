//! Observation detection: a genie detector with optional error injection,
//! exhaustive ML detection on reduced instances, and the error/rate formulas.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    exact_observations, ChannelMatrix, Coord, IndexVector, ObservationTable, SchemeParams, StreamSet,
};
use crate::rng::{complex_gaussian, stream_rng, Purpose};

pub const DEFAULT_ML_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionReport {
    pub tables: [ObservationTable; 3],
    pub errors_injected: usize,
    /// Receiver `i` had an entry perturbed.
    pub symbol_error_flags: [bool; 3],
}

/// Exact observations; with probability `error_rate` per receiver, one uniformly
/// chosen entry is moved by ±1 (the sign is flipped if it would leave `Z_{3Q}`).
pub fn genie_detect<R: Rng + ?Sized>(streams: &StreamSet, error_rate: f64, rng: &mut R) -> Result<DetectionReport> {
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(Error::param("error_rate", format!("must lie in [0, 1], got {error_rate}")));
    }
    let mut tables = exact_observations(streams)?;
    let bound = 3 * streams.q();
    let mut flags = [false; 3];
    let mut injected = 0;
    for (table, flag) in tables.iter_mut().zip(flags.iter_mut()) {
        if error_rate > 0.0 && rng.random_bool(error_rate) {
            perturb_entry(table, bound, rng);
            *flag = true;
            injected += 1;
        }
    }
    Ok(DetectionReport {
        tables,
        errors_injected: injected,
        symbol_error_flags: flags,
    })
}

/// Moves one uniformly chosen entry by ±1 inside `[-bound, bound]`; returns its offset.
pub fn perturb_entry<R: Rng + ?Sized>(table: &mut ObservationTable, bound: i64, rng: &mut R) -> usize {
    let values = table.values_mut();
    let o = rng.random_range(0..values.len());
    let mut delta = if rng.random_bool(0.5) { 1 } else { -1 };
    if (values[o] + delta).abs() > bound {
        delta = -delta;
    }
    values[o] += delta;
    o
}

/// A small sub-lattice on which exhaustive ML search is affordable.
///
/// The index set holds vectors whose active coordinates range over
/// `1..=n_red+1` and whose other coordinates are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpec {
    pub active_coords: Vec<Coord>,
    pub n_red: usize,
    pub q_red: i64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_ML_BUDGET
}

impl ReducedSpec {
    pub fn new(active_coords: Vec<Coord>, n_red: usize, q_red: i64) -> Result<Self> {
        let spec = ReducedSpec {
            active_coords,
            n_red,
            q_red,
            budget: DEFAULT_ML_BUDGET,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_red < 1 {
            return Err(Error::param("n_red", "must be at least 1"));
        }
        if self.q_red < 1 {
            return Err(Error::param("q_red", "must be at least 1"));
        }
        let mut seen = self.active_coords.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.active_coords.len() {
            return Err(Error::param("active_coords", "duplicate coordinate"));
        }
        let candidates = self.candidate_count();
        if candidates > self.budget as f64 {
            return Err(Error::BudgetExceeded {
                candidates,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// `(6·q_red + 1)^{(n_red+1)^{|active|}}`, as a float since it overflows quickly.
    pub fn candidate_count(&self) -> f64 {
        (self.alphabet_size() as f64).powf(self.index_count() as f64)
    }

    pub fn alphabet_size(&self) -> i64 {
        6 * self.q_red + 1
    }

    pub fn index_count(&self) -> usize {
        (self.n_red + 1).pow(self.active_coords.len() as u32)
    }

    /// Reduced index set in lexicographic order.
    pub fn indices(&self) -> Vec<IndexVector> {
        let depth = self.n_red + 1;
        let mut coords = self.active_coords.clone();
        coords.sort();
        (0..self.index_count())
            .map(|mut o| {
                let mut s = IndexVector::splat(1);
                for &c in coords.iter().rev() {
                    s = s.with(c, (o % depth) as i32 + 1);
                    o /= depth;
                }
                s
            })
            .collect()
    }

    /// Scheme parameters for this instance at power `p`.
    ///
    /// The alphabet is fixed by `q_red`, so `Γ` is set by power normalization:
    /// `Γ² · Σ_s |ν_s|² · (3·q_red)² = P`.
    pub fn params(&self, h: &ChannelMatrix, power: f64) -> Result<SchemeParams> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::param("P", format!("must be finite and positive, got {power}")));
        }
        let energy: f64 = self.indices().iter().map(|s| h.monomial(s).norm_sqr()).sum();
        let peak = (3 * self.q_red) as f64;
        Ok(SchemeParams {
            power,
            n: self.n_red,
            epsilon: 0.0,
            c1: 1.0,
            c2: 1.0,
            index_count: self.index_count() as u64,
            q: self.q_red as f64,
            gamma: (power / (energy * peak * peak)).sqrt(),
        })
    }
}

/// Observation values on a reduced index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedObservation {
    pub indices: Vec<IndexVector>,
    pub values: Vec<i64>,
}

/// `Γ·Σ_s ν_s r_s` over the reduced index set.
pub fn synthesize_reduced(values: &[i64], spec: &ReducedSpec, h: &ChannelMatrix, gamma: f64) -> Complex64 {
    spec.indices()
        .iter()
        .zip(values)
        .map(|(s, &v)| h.monomial(s) * v as f64)
        .sum::<Complex64>()
        * gamma
}

/// Exhaustive ML detection of `r` from one received sample.
///
/// Returns the `argmin_r |y - Γ·Σ_s ν_s r_s|` over `r ∈ Z_{3Q_red}^{|S_red|}`;
/// among equal distances the lexicographically smallest candidate wins.
pub fn ml_detect_reduced(
    y: Complex64,
    spec: &ReducedSpec,
    h: &ChannelMatrix,
    params: &SchemeParams,
) -> Result<ReducedObservation> {
    spec.validate()?;
    let indices = spec.indices();
    let points: Vec<Complex64> = indices.iter().map(|s| h.monomial(s) * params.gamma).collect();
    let m = points.len();
    let lo = -3 * spec.q_red;
    let hi = 3 * spec.q_red;

    // Odometer over candidates in lexicographic order; the last index varies fastest.
    let mut cand = vec![lo; m];
    let base: Complex64 = points.iter().map(|p| p * lo as f64).sum();
    let mut current = base;
    let mut best = cand.clone();
    let mut best_dist = (y - current).norm_sqr();
    loop {
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(ReducedObservation { indices, values: best });
            }
            k -= 1;
            if cand[k] < hi {
                cand[k] += 1;
                current += points[k];
                break;
            }
            current -= points[k] * (hi - lo) as f64;
            cand[k] = lo;
        }
        let d = (y - current).norm_sqr();
        if d < best_dist {
            best_dist = d;
            best.copy_from_slice(&cand);
        }
    }
}

/// One point of a symbol-error-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    pub power: f64,
    pub trials: usize,
    pub errors: usize,
}

impl SerPoint {
    pub fn ser(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Binomial standard error of the estimate.
    pub fn std_err(&self) -> f64 {
        let p = self.ser();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Monte Carlo symbol-error rate of reduced ML detection.
///
/// Each trial draws `r_s` as a sum of three uniform `Z_{Q_red}` symbols, passes
/// the synthesized sample through unit-variance complex noise, and counts a
/// trial as an error when the detected table differs anywhere. With
/// `noiseless`, the noise term is omitted.
pub fn ml_symbol_error_rate(
    spec: &ReducedSpec,
    h: &ChannelMatrix,
    power: f64,
    trials: usize,
    seed: u64,
    noiseless: bool,
) -> Result<SerPoint> {
    let params = spec.params(h, power)?;
    let m = spec.index_count();
    let mut sym_rng = stream_rng(seed, 0, Purpose::Symbols, 0);
    let mut noise_rng = stream_rng(seed, 0, Purpose::Noise, 0);
    let mut errors = 0;
    for _ in 0..trials {
        let truth: Vec<i64> = (0..m)
            .map(|_| (0..3).map(|_| sym_rng.random_range(-spec.q_red..=spec.q_red)).sum())
            .collect();
        let mut y = synthesize_reduced(&truth, spec, h, params.gamma);
        if !noiseless {
            y += complex_gaussian(&mut noise_rng, 1.0);
        }
        let detected = ml_detect_reduced(y, spec, h, &params)?;
        if detected.values != truth {
            errors += 1;
        }
    }
    Ok(SerPoint { power, trials, errors })
}

/// `p_e = min(1, 3(N+1)^9 · exp(-c2·P^{ε/2}))`.
pub fn union_bound_pe(params: &SchemeParams) -> f64 {
    let count = 3.0 * ((params.n + 1) as f64).powi(9);
    (count * (-params.c2 * params.power.powf(params.epsilon / 2.0)).exp()).min(1.0)
}

/// Per-substream rate lower bound `max(0, (1 - p_e)·log2(2Q + 1) - 1)` in bits per channel use.
pub fn substream_rate_lb(p_e: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::param("p_e", format!("must lie in [0, 1], got {p_e}")));
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::param("Q", format!("must be at least 1, got {q}")));
    }
    Ok(((1.0 - p_e) * (2.0 * q + 1.0).log2() - 1.0).max(0.0))
}
