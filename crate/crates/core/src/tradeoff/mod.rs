//! DoF-vs-backhaul tradeoff: closed-form curves, slope fitting, converse
//! bounds, the Lemma 1 checker and rate-level simulations of the baselines.

mod bounds;
mod lemma1;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bounds::{rx_pair_bound, rx_sum_upper_bound, to_dmatrix, tx_pair_bound, tx_sum_upper_bound};
pub use lemma1::{lemma1_check, lemma1_instance, Lemma1Report, VectorModel};
pub use simulate::{
    illustrating_example, protocol_rate_report, simulate_centralized, simulate_tdma, ProtocolKind, DEFAULT_MC_SAMPLES,
};

/// Minimum number of grid points for a slope fit.
pub const MIN_GRID: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub dof: f64,
    pub label: String,
}

impl TradeoffPoint {
    pub fn new(alpha: f64, dof: f64, label: impl Into<String>) -> Self {
        TradeoffPoint {
            alpha,
            dof,
            label: label.into(),
        }
    }
}

/// `DoF*(α) = min(1, (1+α)/2)`.
pub fn optimal_tradeoff(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    Ok(f64::min(1.0, (1.0 + alpha) / 2.0))
}

/// Convex combination `p1 + λ·(p2 - p1)`.
pub fn timeshare(p1: &TradeoffPoint, p2: &TradeoffPoint, lambda: f64) -> Result<TradeoffPoint> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    Ok(TradeoffPoint::new(
        p1.alpha + lambda * (p2.alpha - p1.alpha),
        p1.dof + lambda * (p2.dof - p1.dof),
        "timeshare",
    ))
}

/// Centralized processing at receiver 1: `(2(K-1)/K, 1)`.
pub fn centralized_baseline(k: usize) -> Result<TradeoffPoint> {
    if k < 2 {
        return Err(Error::param("K", "must be at least 2"));
    }
    Ok(TradeoffPoint::new(2.0 * (k - 1) as f64 / k as f64, 1.0, "centralized"))
}

/// The two corner points `(0, 1/2)` and `(1, 1)`.
pub fn corner_points() -> [TradeoffPoint; 2] {
    [
        TradeoffPoint::new(0.0, 0.5, "interference-alignment"),
        TradeoffPoint::new(1.0, 1.0, "cooperation-alignment"),
    ]
}

/// OLS slope of `ys` against `xs` over the last `max(4, ⌈n/2⌉)` points.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae vs {} ordinates", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < MIN_GRID {
        return Err(Error::InsufficientGrid { got: n, need: MIN_GRID });
    }
    let take = MIN_GRID.max(n.div_ceil(2));
    let (xs, ys) = (&xs[n - take..], &ys[n - take..]);
    let mx = xs.iter().sum::<f64>() / take as f64;
    let my = ys.iter().sum::<f64>() / take as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("P_grid", "grid points must be distinct"));
    }
    Ok(sxy / sxx)
}

/// Per-user rates and the average backhaul rate `R̄_b` on a power grid, all in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub powers: Vec<f64>,
    /// `rates[p][k]`: rate of user `k` at `powers[p]`.
    pub rates: Vec<[f64; 3]>,
    pub backhaul_rate: Vec<f64>,
}

impl RateReport {
    pub fn log2_powers(&self) -> Vec<f64> {
        self.powers.iter().map(|p| p.log2()).collect()
    }

    fn check(&self) -> Result<()> {
        if self.rates.len() != self.powers.len() || self.backhaul_rate.len() != self.powers.len() {
            return Err(Error::DimensionMismatch("rate report columns differ in length".into()));
        }
        Ok(())
    }

    pub fn user_slopes(&self) -> Result<[f64; 3]> {
        self.check()?;
        let xs = self.log2_powers();
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let ys: Vec<f64> = self.rates.iter().map(|r| r[k]).collect();
            *slot = fit_slope(&xs, &ys)?;
        }
        Ok(out)
    }

    pub fn backhaul_slope(&self) -> Result<f64> {
        self.check()?;
        fit_slope(&self.log2_powers(), &self.backhaul_rate)
    }
}

/// `α` = fitted slope of `R̄_b` vs `log2 P`, DoF = mean fitted per-user slope.
pub fn measured_tradeoff_point(report: &RateReport) -> Result<TradeoffPoint> {
    let slopes = report.user_slopes()?;
    Ok(TradeoffPoint::new(
        report.backhaul_slope()?,
        slopes.iter().sum::<f64>() / 3.0,
        report.label.clone(),
    ))
}
