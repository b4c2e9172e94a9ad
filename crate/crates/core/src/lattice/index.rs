//! Nine-coordinate exponent vectors and the index sets `S_M = {1..M}^9`.
//!
//! Coordinates are ordered `(1,1),(1,2),(1,3),(2,1),…,(3,3)` and the first
//! coordinate is the most significant one for lexicographic order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of coordinates in an index vector (one per channel gain).
pub const DIM: usize = 9;

/// One of the nine coordinates `(i, j)`, `i, j ∈ {1, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Coord(u8);

impl Coord {
    pub const C11: Coord = Coord(0);
    pub const C12: Coord = Coord(1);
    pub const C13: Coord = Coord(2);
    pub const C21: Coord = Coord(3);
    pub const C22: Coord = Coord(4);
    pub const C23: Coord = Coord(5);
    pub const C31: Coord = Coord(6);
    pub const C32: Coord = Coord(7);
    pub const C33: Coord = Coord(8);

    pub const ALL: [Coord; DIM] = [
        Coord::C11,
        Coord::C12,
        Coord::C13,
        Coord::C21,
        Coord::C22,
        Coord::C23,
        Coord::C31,
        Coord::C32,
        Coord::C33,
    ];

    /// Coordinate `(row, col)` with 1-based `row, col ∈ {1, 2, 3}`.
    pub fn new(row: usize, col: usize) -> Result<Self> {
        if (1..=3).contains(&row) && (1..=3).contains(&col) {
            Ok(Coord(((row - 1) * 3 + (col - 1)) as u8))
        } else {
            Err(Error::UnknownCoordinate(format!("({row},{col})")))
        }
    }

    pub fn position(self) -> usize {
        self.0 as usize
    }

    /// 1-based receiver (row) index.
    pub fn row(self) -> usize {
        self.0 as usize / 3 + 1
    }

    /// 1-based transmitter (column) index.
    pub fn col(self) -> usize {
        self.0 as usize % 3 + 1
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row(), self.col())
    }
}

impl From<Coord> for String {
    fn from(c: Coord) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Coord {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Accepts `"(3,1)"`, `"3,1"`, `"s31"` and `"31"`.
impl FromStr for Coord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: Vec<usize> = s
            .trim()
            .trim_start_matches('s')
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ',' | ' '))
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::UnknownCoordinate(s.to_string()))?;
        match digits[..] {
            [row, col] => Coord::new(row, col).map_err(|_| Error::UnknownCoordinate(s.to_string())),
            _ => Err(Error::UnknownCoordinate(s.to_string())),
        }
    }
}

/// An exponent vector `s = [s11, s12, …, s33]`.
///
/// Coordinates are signed so that shifted indices such as `s11 - 1` can be
/// formed freely; anything outside the symbol index set resolves to 0 on lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexVector(pub [i32; DIM]);

impl IndexVector {
    pub const fn splat(v: i32) -> Self {
        IndexVector([v; DIM])
    }

    pub fn get(&self, c: Coord) -> i32 {
        self.0[c.position()]
    }

    pub fn with(mut self, c: Coord, v: i32) -> Self {
        self.0[c.position()] = v;
        self
    }

    /// Changes one coordinate by `delta`, with no range clamping.
    pub fn shift(self, c: Coord, delta: i32) -> Self {
        let v = self.get(c) + delta;
        self.with(c, v)
    }

    /// Applies several shifts at once, e.g. `s.shifted(&[(C12, 1), (C13, -1)])`.
    pub fn shifted(self, deltas: &[(Coord, i32)]) -> Self {
        deltas.iter().fold(self, |s, &(c, d)| s.shift(c, d))
    }

    /// Membership in `{1..depth}^9`.
    pub fn in_cube(&self, depth: usize) -> bool {
        self.0.iter().all(|&v| v >= 1 && v as i64 <= depth as i64)
    }

    /// Membership in `S_N`.
    pub fn in_sn(&self, n: usize) -> bool {
        self.in_cube(n)
    }

    /// Membership in `S_{N+1}`.
    pub fn in_sn1(&self, n: usize) -> bool {
        self.in_cube(n + 1)
    }
}

impl fmt::Display for IndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// The cube `{1..depth}^9` with a dense mixed-radix numbering.
///
/// Offsets follow lexicographic order, so iterating offsets `0..len` visits
/// vectors in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexCube {
    depth: usize,
}

impl IndexCube {
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1, "index cube depth must be positive");
        IndexCube { depth }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.depth.pow(DIM as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: &IndexVector) -> bool {
        s.in_cube(self.depth)
    }

    pub fn offset(&self, s: &IndexVector) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        Some(
            s.0.iter()
                .fold(0usize, |acc, &v| acc * self.depth + (v as usize - 1)),
        )
    }

    pub fn vector(&self, mut offset: usize) -> IndexVector {
        let mut out = [0i32; DIM];
        for slot in out.iter_mut().rev() {
            *slot = (offset % self.depth) as i32 + 1;
            offset /= self.depth;
        }
        IndexVector(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = IndexVector> + '_ {
        (0..self.len()).map(move |o| self.vector(o))
    }

    /// All vectors of the cube with `coord` pinned to `value`, lexicographic
    /// over the remaining eight coordinates.
    pub fn slab(&self, coord: Coord, value: i32) -> impl Iterator<Item = IndexVector> {
        let inner = IndexCube::new(self.depth);
        let count = self.depth.pow((DIM - 1) as u32);
        let pos = coord.position();
        (0..count).map(move |o| {
            let mut free = [0i32; DIM - 1];
            let mut rem = o;
            for slot in free.iter_mut().rev() {
                *slot = (rem % inner.depth) as i32 + 1;
                rem /= inner.depth;
            }
            let mut out = [0i32; DIM];
            let mut k = 0;
            for (i, slot) in out.iter_mut().enumerate() {
                if i == pos {
                    *slot = value;
                } else {
                    *slot = free[k];
                    k += 1;
                }
            }
            IndexVector(out)
        })
    }

    /// Number of vectors in one slab, `depth^8`.
    pub fn slab_len(&self) -> usize {
        self.depth.pow((DIM - 1) as u32)
    }
}
