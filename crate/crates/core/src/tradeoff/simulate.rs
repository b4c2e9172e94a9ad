//! Rate-level simulations: the aligned quantize-forward chain on the
//! structured channel, centralized processing, TDMA, and rate reports for the
//! lattice protocols.
//!
//! Quantization is modeled as additive unit-variance noise, and a quantized
//! message costs `log2(1 + E|input|²)` bits per sample.

use nalgebra::{Cholesky, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::RateReport;
use crate::detection::{substream_rate_lb, union_bound_pe};
use crate::error::{Error, Result};
use crate::lattice::{derive_params, ChannelMatrix, ChannelStructure, StreamSet};
use crate::rng::{complex_gaussian, stream_rng, Purpose};
use crate::rx::{run_rx_protocol, DetectorMode};
use crate::tx::run_tx_backhaul;

pub const DEFAULT_MC_SAMPLES: usize = 20_000;

const DEGENERATE: f64 = 1e-12;

fn mean_power(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64
}

/// Rate of `coef·x + e` decoded with `e` treated as noise, from sample powers.
fn link_rate(coef: Complex64, x: &[Complex64], observed: &[Complex64]) -> f64 {
    let noise: Vec<Complex64> = observed.iter().zip(x).map(|(o, xi)| o - coef * xi).collect();
    (1.0 + coef.norm_sqr() * mean_power(x) / mean_power(&noise)).log2()
}

fn quantize(input: &[Complex64], noise: &[Complex64]) -> (Vec<Complex64>, f64) {
    let bits = (1.0 + mean_power(input)).log2();
    (input.iter().zip(noise).map(|(a, q)| a + q).collect(), bits)
}

fn check_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.is_empty() {
        return Err(Error::Empty("power grid"));
    }
    if let Some(p) = p_grid.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::param("P", format!("must be finite and non-negative, got {p}")));
    }
    Ok(())
}

/// The chain `m_{3→2} → x2 → m_{2→1} → x1 → m_{1→3} → x3` on the channel with
/// `h31 = γ·h21`, `h33 = γ·h23` (the other entries taken from `base`).
///
/// Gaussian inputs, receiver noise and quantization noise are drawn once and
/// reused at every power (common random numbers), so rate curves are smooth in `P`.
pub fn illustrating_example(
    gamma: Complex64,
    base: [[Complex64; 3]; 3],
    p_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<RateReport> {
    check_grid(p_grid)?;
    if gamma.norm() == 0.0 {
        return Err(Error::param("gamma", "must be nonzero"));
    }
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2"));
    }
    let h = ChannelMatrix::illustrating(base, gamma).h;
    for (i, row) in h.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            if g.norm() == 0.0 {
                return Err(Error::DegenerateChannel(format!("h{}{} is zero", i + 1, j + 1)));
            }
        }
    }
    let [[h11, h12, h13], [h21, h22, h23], [_, h32, _]] = h;
    let coef2 = gamma * h22 - h32;
    let coef1 = h11 - h13 * h21 / h23;
    let coef3 = gamma * h23 - h32 * h13 / h12;
    for (k, c) in [coef1, coef2, coef3].iter().enumerate() {
        if c.norm() < DEGENERATE {
            return Err(Error::DegenerateChannel(format!(
                "user {} has no interference-free direction after alignment",
                k + 1
            )));
        }
    }

    let mut rng = stream_rng(seed, 0, Purpose::Noise, 0);
    let mut draw = || -> Vec<Complex64> { (0..samples).map(|_| complex_gaussian(&mut rng, 1.0)).collect() };
    let u = [draw(), draw(), draw()];
    let z = [draw(), draw(), draw()];
    let q = [draw(), draw(), draw()];

    let mut rates = Vec::with_capacity(p_grid.len());
    let mut backhaul = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let amp = p.sqrt();
        let x: Vec<[Complex64; 3]> = (0..samples).map(|t| [0, 1, 2].map(|k| u[k][t] * amp)).collect();
        let xs = |k: usize| -> Vec<Complex64> { x.iter().map(|v| v[k]).collect() };
        let (x1, x2, x3) = (xs(0), xs(1), xs(2));
        let y: Vec<[Complex64; 3]> = (0..samples)
            .map(|t| {
                let mut yt = [Complex64::default(); 3];
                for (i, yi) in yt.iter_mut().enumerate() {
                    *yi = (0..3).map(|j| h[i][j] * x[t][j]).sum::<Complex64>() + z[i][t];
                }
                yt
            })
            .collect();
        let ys = |i: usize| -> Vec<Complex64> { y.iter().map(|v| v[i]).collect() };
        let (y1, y2, y3) = (ys(0), ys(1), ys(2));

        let (m32, bits32) = quantize(&y3, &q[2]);
        let t2: Vec<Complex64> = y2.iter().zip(&m32).map(|(a, m)| gamma * a - m).collect();
        let r2 = link_rate(coef2, &x2, &t2);

        let e2: Vec<Complex64> = y2.iter().zip(&x2).map(|(a, b)| a - h22 * b).collect();
        let in21: Vec<Complex64> = x2.iter().zip(&e2).map(|(b, e)| h12 * b + h13 / h23 * e).collect();
        let (m21, bits21) = quantize(&in21, &q[1]);
        let t1: Vec<Complex64> = y1.iter().zip(&m21).map(|(a, m)| a - m).collect();
        let r1 = link_rate(coef1, &x1, &t1);

        let e1: Vec<Complex64> = y1.iter().zip(&x1).map(|(a, b)| a - h11 * b).collect();
        let in13: Vec<Complex64> = x1.iter().zip(&e1).map(|(a, e)| gamma * h21 * a + h32 / h12 * e).collect();
        let (m13, bits13) = quantize(&in13, &q[0]);
        let t3: Vec<Complex64> = y3.iter().zip(&m13).map(|(a, m)| a - m).collect();
        let r3 = link_rate(coef3, &x3, &t3);

        rates.push([r1, r2, r3]);
        backhaul.push((bits32 + bits21 + bits13) / 3.0);
    }
    Ok(RateReport {
        label: "illustrating-example".into(),
        powers: p_grid.to_vec(),
        rates,
        backhaul_rate: backhaul,
    })
}

/// Receivers 2 and 3 quantize-forward to receiver 1, which decodes all three
/// messages jointly and returns messages 2 and 3 over the backhaul.
pub fn simulate_centralized(h: &ChannelMatrix, p_grid: &[f64]) -> Result<RateReport> {
    check_grid(p_grid)?;
    let hm = Matrix3::from_fn(|i, j| h.h[i][j]);
    let noise = [1.0f64, 2.0, 2.0];
    let mut rates = Vec::with_capacity(p_grid.len());
    let mut backhaul = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let whitened = Matrix3::from_fn(|i, j| hm[(i, j)] / noise[i].sqrt());
        let m = Matrix3::identity() + whitened * whitened.adjoint() * Complex64::new(p, 0.0);
        let chol = Cholesky::new(m).ok_or_else(|| Error::DegenerateChannel("I + P·HH^H not positive definite".into()))?;
        let sum_rate: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.norm().log2()).sum();
        let per_user = sum_rate / 3.0;
        let fwd: f64 = (1..3)
            .map(|i| (1.0 + p * (0..3).map(|j| h.h[i][j].norm_sqr()).sum::<f64>() + 1.0).log2())
            .sum();
        rates.push([per_user; 3]);
        backhaul.push((fwd + 2.0 * per_user) / 3.0);
    }
    Ok(RateReport {
        label: "centralized".into(),
        powers: p_grid.to_vec(),
        rates,
        backhaul_rate: backhaul,
    })
}

/// Orthogonal access: each user owns a third of the channel uses, no backhaul.
pub fn simulate_tdma(h: &ChannelMatrix, p_grid: &[f64]) -> Result<RateReport> {
    check_grid(p_grid)?;
    let rates = p_grid
        .iter()
        .map(|&p| [0, 1, 2].map(|k| (1.0 + h.h[k][k].norm_sqr() * p).log2() / 3.0))
        .collect();
    Ok(RateReport {
        label: "tdma".into(),
        powers: p_grid.to_vec(),
        rates,
        backhaul_rate: vec![0.0; p_grid.len()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    RxCoop,
    TxCoop,
}

/// Per-user rate `N⁹·((1 - p_e)·log2(2⌊Q⌋ + 1) - 1)^+` and the measured ledger
/// rate of one protocol run per power. Every power must give `Q ≥ 1`.
pub fn protocol_rate_report(
    kind: ProtocolKind,
    n: usize,
    epsilon: f64,
    c1: f64,
    c2: f64,
    p_grid: &[f64],
    seed: u64,
) -> Result<RateReport> {
    check_grid(p_grid)?;
    let mut rates = Vec::with_capacity(p_grid.len());
    let mut backhaul = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        let mut params = derive_params(p, n, epsilon, c1)?;
        params.c2 = c2;
        let q = params.q_int();
        let per_user = (n as f64).powi(9) * substream_rate_lb(union_bound_pe(&params), q as f64)?;
        let mut rng = stream_rng(seed, i as u64, Purpose::Symbols, 0);
        let streams = StreamSet::random(n, q, &mut rng);
        let ledger = match kind {
            ProtocolKind::RxCoop => run_rx_protocol(&streams, DetectorMode::ExactGenie, &mut rng)?.ledger,
            ProtocolKind::TxCoop => run_tx_backhaul(&streams)?.ledger,
        };
        rates.push([per_user; 3]);
        backhaul.push(ledger.average_rate(3));
    }
    Ok(RateReport {
        label: match kind {
            ProtocolKind::RxCoop => "rx-coop".into(),
            ProtocolKind::TxCoop => "tx-coop".into(),
        },
        powers: p_grid.to_vec(),
        rates,
        backhaul_rate: backhaul,
    })
}

impl ChannelMatrix {
    /// `γ` of the structured example, if this channel carries that tag.
    pub fn illustrating_gamma(&self) -> Option<Complex64> {
        match self.structure {
            ChannelStructure::IllustratingExample { gamma } => Some(gamma),
            ChannelStructure::Generic => None,
        }
    }
}
