use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_C1: f64 = 1.0;
pub const DEFAULT_C2: f64 = 1.0;

/// Physical-layer scaling constants of the monomial scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Transmit power (linear).
    pub power: f64,
    /// Constellation depth; each user carries `n^9` substreams.
    pub n: usize,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    /// `(n+1)^9`, the number of received monomial directions.
    pub index_count: u64,
    /// Real-valued constellation half-width.
    pub q: f64,
    /// Transmit amplitude scaling.
    pub gamma: f64,
}

impl SchemeParams {
    /// Integer half-width `⌊Q⌋` of the symbol alphabet `Z_Q`.
    pub fn q_int(&self) -> i64 {
        self.q.floor() as i64
    }

    pub fn log2_power(&self) -> f64 {
        self.power.log2()
    }
}

/// `I = (N+1)^9`, `Q = (1/3)·P^{(1-ε)/(I+2ε)}`, `Γ = c1·P^{(I-2+4ε)/(2(I+2ε))}`.
///
/// Rejects inputs whose derived `Q` is below 1, since `Z_Q` would collapse to `{0}`.
pub fn derive_params(power: f64, n: usize, epsilon: f64, c1: f64) -> Result<SchemeParams> {
    let p = derive_params_unchecked(power, n, epsilon, c1)?;
    if p.q < 1.0 {
        return Err(Error::PowerTooLow { n, q: p.q });
    }
    Ok(p)
}

/// Same formulas as [`derive_params`] without the `Q ≥ 1` floor check.
pub fn derive_params_unchecked(power: f64, n: usize, epsilon: f64, c1: f64) -> Result<SchemeParams> {
    if !(power > 1.0 && power.is_finite()) {
        return Err(Error::param("P", format!("must be finite and > 1, got {power}")));
    }
    if n < 1 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::param("c1", format!("must be positive, got {c1}")));
    }
    let index_count = ((n + 1) as u64).pow(9);
    let i = index_count as f64;
    let q = power.powf((1.0 - epsilon) / (i + 2.0 * epsilon)) / 3.0;
    let gamma = c1 * power.powf((i - 2.0 + 4.0 * epsilon) / (2.0 * (i + 2.0 * epsilon)));
    Ok(SchemeParams {
        power,
        n,
        epsilon,
        c1,
        c2: DEFAULT_C2,
        index_count,
        q,
        gamma,
    })
}
