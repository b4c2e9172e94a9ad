//! Finite-`P` evaluation of the receiver- and transmitter-side converse bounds
//! on `2·Σ R_k`, with the `o(log P)` terms dropped.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::ChannelMatrix;

pub fn to_dmatrix(h: &ChannelMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(3, 3, |i, j| h.h[i][j])
}

fn check(h: &DMatrix<Complex64>, power: f64, rb_bar: f64) -> Result<usize> {
    if !h.is_square() || h.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "channel must be square with K >= 2, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if power.is_nan() || power < 0.0 {
        return Err(Error::param("P", format!("must be non-negative, got {power}")));
    }
    if rb_bar.is_nan() || rb_bar < 0.0 {
        return Err(Error::param("Rb_bar", format!("must be non-negative, got {rb_bar}")));
    }
    Ok(h.nrows())
}

/// `R_{ℓ-1} + R_ℓ ≤ log2(1 + P(|h_{ℓ,ℓ-1}|² + |h_{ℓℓ}|²)) + Σ_{i≠ℓ} R_b^{[i,ℓ]}`
/// for 0-based `ell`, with `ℓ-1` taken modulo `K`.
pub fn rx_pair_bound(h: &DMatrix<Complex64>, power: f64, ell: usize, rb_into_ell: f64) -> Result<f64> {
    let k = check(h, power, rb_into_ell)?;
    if ell >= k {
        return Err(Error::param("ell", format!("must be below K = {k}")));
    }
    let prev = (ell + k - 1) % k;
    Ok((1.0 + power * (h[(ell, prev)].norm_sqr() + h[(ell, ell)].norm_sqr())).log2() + rb_into_ell)
}

/// `Σ_{ℓ=2}^{K+1} log2(1 + P(|h_{ℓ,ℓ-1}|² + |h_{ℓℓ}|²)) + K·R̄_b`, indices modulo `K`.
pub fn rx_sum_upper_bound(h: &DMatrix<Complex64>, power: f64, rb_bar: f64) -> Result<f64> {
    let k = check(h, power, rb_bar)?;
    let mut total = k as f64 * rb_bar;
    for ell in 0..k {
        total += rx_pair_bound(h, power, ell, 0.0)?;
    }
    Ok(total)
}

fn row_cross_power(h: &DMatrix<Complex64>, row: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..h.ncols() {
        for j in 0..h.ncols() {
            acc += (h[(row, i)] * h[(row, j)].conj()).norm();
        }
    }
    acc
}

/// `R_k + R_ℓ ≤ log2(1 + |h_kk|²/|h_ℓk|²) + log2(1 + P·Σ_{i,j}|h_ℓi h_ℓj*|) + Σ_{j≠k} R_b^{[k,j]}`
/// (0-based `k`, `ell`).
pub fn tx_pair_bound(h: &DMatrix<Complex64>, power: f64, k: usize, ell: usize, rb_from_k: f64) -> Result<f64> {
    let kk = check(h, power, rb_from_k)?;
    if k >= kk || ell >= kk || k == ell {
        return Err(Error::param("pair", format!("need distinct indices below K = {kk}")));
    }
    let cross = h[(ell, k)].norm_sqr();
    if cross == 0.0 {
        return Err(Error::DegenerateChannel(format!("h[{ell}][{k}] is zero")));
    }
    Ok((1.0 + h[(k, k)].norm_sqr() / cross).log2() + (1.0 + power * row_cross_power(h, ell)).log2() + rb_from_k)
}

/// `Σ_k log2(1 + P·Σ_{i,j}|h_ki h_kj*|) + K·R̄_b`.
pub fn tx_sum_upper_bound(h: &DMatrix<Complex64>, power: f64, rb_bar: f64) -> Result<f64> {
    let k = check(h, power, rb_bar)?;
    let mut total = k as f64 * rb_bar;
    for row in 0..k {
        total += (1.0 + power * row_cross_power(h, row)).log2();
    }
    Ok(total)
}
