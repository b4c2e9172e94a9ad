//! Transmit synthesis, the channel, and the exact observation sums.

use num_complex::Complex64;

use super::channel::{ChannelMatrix, MonomialTable};
use super::index::{Coord, IndexCube, IndexVector};
use super::params::SchemeParams;
use super::tables::{ObservationTable, StreamSet, SubstreamTable};
use crate::error::{Error, Result};

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(s: f64, x: f64, comp: &mut f64) -> f64 {
    let t = s + x;
    if s.abs() >= x.abs() {
        *comp += (s - t) + x;
    } else {
        *comp += (x - t) + s;
    }
    t
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `x = Γ·Σ_{s∈S_N} ν_s·symbol(s)`.
pub fn synthesize_transmit(streams: &SubstreamTable, h: &ChannelMatrix, params: &SchemeParams) -> Complex64 {
    let table = MonomialTable::new(h, streams.cube());
    synthesize_with(streams, &table, params.gamma)
}

/// As [`synthesize_transmit`] with monomials precomputed over `S_N`.
pub fn synthesize_with(streams: &SubstreamTable, monomials: &MonomialTable, gamma: f64) -> Complex64 {
    debug_assert_eq!(monomials.cube, streams.cube());
    let acc: CompensatedSum = streams
        .values()
        .iter()
        .zip(&monomials.values)
        .filter(|(&v, _)| v != 0)
        .map(|(&v, &nu)| nu * v as f64)
        .collect();
    acc.value() * gamma
}

/// `y_i = Σ_j h_ij x_j + z_i`.
pub fn apply_channel(x: [Complex64; 3], h: &ChannelMatrix, noise: Option<[Complex64; 3]>) -> [Complex64; 3] {
    let mut y = h.matvec(&x);
    if let Some(z) = noise {
        for (yi, zi) in y.iter_mut().zip(z) {
            *yi += zi;
        }
    }
    y
}

/// `Γ·Σ_{s∈S_{N+1}} ν_s·r_s`, the noiseless received sample implied by an observation table.
pub fn reconstruct_received(obs: &ObservationTable, monomials: &MonomialTable, gamma: f64) -> Complex64 {
    debug_assert_eq!(monomials.cube, obs.cube());
    let acc: CompensatedSum = obs
        .values()
        .iter()
        .zip(&monomials.values)
        .filter(|(&v, _)| v != 0)
        .map(|(&v, &nu)| nu * v as f64)
        .collect();
    acc.value() * gamma
}

/// The coordinate receiver `i` (1-based) decrements for transmitter `j`'s term.
pub fn observation_coord(receiver: u8, transmitter: u8) -> Coord {
    Coord::ALL[(receiver as usize - 1) * 3 + (transmitter as usize - 1)]
}

/// `r_{i,s}` evaluated at any integer vector (zero outside `S_{N+1}` automatically).
pub fn observation_at(streams: &StreamSet, receiver: u8, s: &IndexVector) -> i64 {
    (1..=3u8)
        .map(|j| streams.tables[j as usize - 1].get(&s.shift(observation_coord(receiver, j), -1)))
        .sum()
}

/// Exact genie-separated observation sums for all three receivers:
/// `r_{i,s} = a_{s - e_{i1}} + b_{s - e_{i2}} + c_{s - e_{i3}}` for `s ∈ S_{N+1}`.
pub fn exact_observations(streams: &StreamSet) -> Result<[ObservationTable; 3]> {
    for t in &streams.tables {
        t.validate()?;
    }
    let n = streams.n();
    let bound = 3 * streams.q();
    let cube = IndexCube::new(n + 1);
    let tables = [1u8, 2, 3].map(|i| {
        let values: Vec<i64> = cube.iter().map(|s| observation_at(streams, i, &s)).collect();
        ObservationTable::new(i, n, values).expect("cube length matches")
    });
    for t in &tables {
        if let Some((s, v)) = t.iter().find(|(_, v)| v.abs() > bound) {
            return Err(Error::SymbolOutOfRange { value: v, bound, index: s });
        }
    }
    Ok(tables)
}
