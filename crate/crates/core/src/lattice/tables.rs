//! Integer symbol tables indexed by exponent vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::{IndexCube, IndexVector};
use crate::error::{Error, Result};

/// Per-transmitter substream symbols `a_s`, `b_s` or `c_s` over `S_N`.
///
/// Lookups outside `S_N` return 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstreamTable {
    owner: u8,
    n: usize,
    q: i64,
    values: Vec<i64>,
}

impl SubstreamTable {
    /// `values` in lexicographic order over `S_N`, each within `[-q, q]`.
    pub fn new(owner: u8, n: usize, q: i64, values: Vec<i64>) -> Result<Self> {
        let cube = IndexCube::new(n);
        if values.len() != cube.len() {
            return Err(Error::DimensionMismatch(format!(
                "substream table for N={n} needs {} symbols, got {}",
                cube.len(),
                values.len()
            )));
        }
        if let Some((o, &v)) = values.iter().enumerate().find(|(_, v)| v.abs() > q) {
            return Err(Error::SymbolOutOfRange {
                value: v,
                bound: q,
                index: cube.vector(o),
            });
        }
        Ok(SubstreamTable { owner, n, q, values })
    }

    pub fn zeros(owner: u8, n: usize, q: i64) -> Self {
        SubstreamTable {
            owner,
            n,
            q,
            values: vec![0; IndexCube::new(n).len()],
        }
    }

    /// Symbols drawn uniformly from `Z_q`.
    pub fn random<R: Rng + ?Sized>(owner: u8, n: usize, q: i64, rng: &mut R) -> Self {
        let values = (0..IndexCube::new(n).len())
            .map(|_| rng.random_range(-q..=q))
            .collect();
        SubstreamTable { owner, n, q, values }
    }

    pub fn from_fn(owner: u8, n: usize, q: i64, f: impl Fn(&IndexVector) -> i64) -> Result<Self> {
        let values = IndexCube::new(n).iter().map(|s| f(&s)).collect();
        SubstreamTable::new(owner, n, q, values)
    }

    pub fn owner(&self) -> u8 {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn cube(&self) -> IndexCube {
        IndexCube::new(self.n)
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, s: &IndexVector) -> i64 {
        self.cube().offset(s).map_or(0, |o| self.values[o])
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexVector, i64)> + '_ {
        let cube = self.cube();
        self.values.iter().enumerate().map(move |(o, &v)| (cube.vector(o), v))
    }

    /// Checks every stored symbol against `Z_q`.
    pub fn validate(&self) -> Result<()> {
        let cube = self.cube();
        match self.values.iter().position(|v| v.abs() > self.q) {
            Some(o) => Err(Error::SymbolOutOfRange {
                value: self.values[o],
                bound: self.q,
                index: cube.vector(o),
            }),
            None => Ok(()),
        }
    }
}

/// The three users' substreams `(a, b, c)` for one time slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSet {
    pub tables: [SubstreamTable; 3],
}

impl StreamSet {
    pub fn new(a: SubstreamTable, b: SubstreamTable, c: SubstreamTable) -> Result<Self> {
        if a.n != b.n || b.n != c.n {
            return Err(Error::DimensionMismatch("substream tables differ in depth N".into()));
        }
        if a.q != b.q || b.q != c.q {
            return Err(Error::DimensionMismatch("substream tables differ in alphabet Q".into()));
        }
        Ok(StreamSet { tables: [a, b, c] })
    }

    pub fn zeros(n: usize, q: i64) -> Self {
        StreamSet {
            tables: [1, 2, 3].map(|u| SubstreamTable::zeros(u, n, q)),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, q: i64, rng: &mut R) -> Self {
        StreamSet {
            tables: [1, 2, 3].map(|u| SubstreamTable::random(u, n, q, rng)),
        }
    }

    pub fn n(&self) -> usize {
        self.tables[0].n
    }

    pub fn q(&self) -> i64 {
        self.tables[0].q
    }

    pub fn a(&self) -> &SubstreamTable {
        &self.tables[0]
    }

    pub fn b(&self) -> &SubstreamTable {
        &self.tables[1]
    }

    pub fn c(&self) -> &SubstreamTable {
        &self.tables[2]
    }

    /// Entrywise sum; the alphabet grows to the sum of both alphabets.
    pub fn add(&self, other: &StreamSet) -> Result<StreamSet> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch("stream sets differ in depth N".into()));
        }
        let q = self.q() + other.q();
        let tables = [0, 1, 2].map(|k| {
            let (x, y) = (&self.tables[k], &other.tables[k]);
            SubstreamTable {
                owner: x.owner,
                n: x.n,
                q,
                values: x.values.iter().zip(&y.values).map(|(u, v)| u + v).collect(),
            }
        });
        Ok(StreamSet { tables })
    }
}

/// Per-receiver observation sums `r_{i,s}` over `S_{N+1}`.
///
/// Lookups outside `S_{N+1}` return 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationTable {
    receiver: u8,
    n: usize,
    values: Vec<i64>,
}

impl ObservationTable {
    pub fn new(receiver: u8, n: usize, values: Vec<i64>) -> Result<Self> {
        let len = IndexCube::new(n + 1).len();
        if values.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "observation table for N={n} needs {len} entries, got {}",
                values.len()
            )));
        }
        Ok(ObservationTable { receiver, n, values })
    }

    pub fn zeros(receiver: u8, n: usize) -> Self {
        ObservationTable {
            receiver,
            n,
            values: vec![0; IndexCube::new(n + 1).len()],
        }
    }

    pub fn receiver(&self) -> u8 {
        self.receiver
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cube(&self) -> IndexCube {
        IndexCube::new(self.n + 1)
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [i64] {
        &mut self.values
    }

    pub fn get(&self, s: &IndexVector) -> i64 {
        self.cube().offset(s).map_or(0, |o| self.values[o])
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexVector, i64)> + '_ {
        let cube = self.cube();
        self.values.iter().enumerate().map(move |(o, &v)| (cube.vector(o), v))
    }

    pub fn max_abs(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

/// A table over a cube that fills in over time.
///
/// Lookups outside the cube resolve to `Some(0)`; unfilled entries inside it to `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTable {
    cube: IndexCube,
    values: Vec<i64>,
    known: Vec<bool>,
}

impl PartialTable {
    pub fn new(cube: IndexCube) -> Self {
        PartialTable {
            cube,
            values: vec![0; cube.len()],
            known: vec![false; cube.len()],
        }
    }

    pub fn cube(&self) -> IndexCube {
        self.cube
    }

    pub fn get(&self, s: &IndexVector) -> Option<i64> {
        match self.cube.offset(s) {
            None => Some(0),
            Some(o) if self.known[o] => Some(self.values[o]),
            Some(_) => None,
        }
    }

    /// Stores a value; indices outside the cube are ignored.
    pub fn set(&mut self, s: &IndexVector, v: i64) {
        if let Some(o) = self.cube.offset(s) {
            self.values[o] = v;
            self.known[o] = true;
        }
    }

    pub fn is_complete(&self) -> bool {
        self.known.iter().all(|&k| k)
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Values in cube order, with unknown entries as `None`.
    pub fn entries(&self) -> impl Iterator<Item = (IndexVector, Option<i64>)> + '_ {
        (0..self.cube.len()).map(move |o| {
            (
                self.cube.vector(o),
                self.known[o].then_some(self.values[o]),
            )
        })
    }

    pub fn to_substream(&self, owner: u8, q: i64) -> Option<SubstreamTable> {
        self.is_complete().then(|| SubstreamTable {
            owner,
            n: self.cube.depth(),
            q,
            values: self.values.clone(),
        })
    }

    pub fn to_observation(&self, receiver: u8) -> Option<ObservationTable> {
        self.is_complete().then(|| ObservationTable {
            receiver,
            n: self.cube.depth() - 1,
            values: self.values.clone(),
        })
    }
}
