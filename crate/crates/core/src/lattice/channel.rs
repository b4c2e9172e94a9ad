//! The 3×3 complex channel and its monomials `ν_s = ∏ h_ij^{s_ij}`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::{Coord, IndexCube, IndexVector, DIM};
use crate::error::{Error, Result};

pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_COLLISION_TOLERANCE: f64 = 1e-9;

/// How a channel realization was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ChannelStructure {
    Generic,
    /// `h31 = γ·h21` and `h33 = γ·h23`.
    IllustratingExample { gamma: Complex64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    /// Row-major gains, `h[i][j]` from transmitter `j+1` to receiver `i+1`.
    pub h: [[Complex64; 3]; 3],
    pub structure: ChannelStructure,
}

impl ChannelMatrix {
    pub fn new(h: [[Complex64; 3]; 3]) -> Self {
        ChannelMatrix {
            h,
            structure: ChannelStructure::Generic,
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut h = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, g) in row.iter_mut().enumerate() {
                *g = f(i, j);
            }
        }
        ChannelMatrix::new(h)
    }

    pub fn identity() -> Self {
        ChannelMatrix::from_fn(|i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn ones() -> Self {
        ChannelMatrix::from_fn(|_, _| Complex64::new(1.0, 0.0))
    }

    /// Channel of the illustrating example: `h31 = γ h21`, `h33 = γ h23`.
    /// Entries of `base` at (3,1) and (3,3) are ignored.
    pub fn illustrating(base: [[Complex64; 3]; 3], gamma: Complex64) -> Self {
        let mut h = base;
        h[2][0] = gamma * h[1][0];
        h[2][2] = gamma * h[1][2];
        ChannelMatrix {
            h,
            structure: ChannelStructure::IllustratingExample { gamma },
        }
    }

    /// Gains with magnitude uniform in `[0.5, 1.5]` and uniform phase.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        ChannelMatrix::from_fn(|_, _| random_gain(rng))
    }

    /// Draws until the realization is invertible and in generic position for depth `n`.
    pub fn random_generic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        loop {
            let h = ChannelMatrix::random(rng);
            if h.check_invertible(DEFAULT_SINGULARITY_THRESHOLD).is_ok()
                && h.check_generic(n, DEFAULT_COLLISION_TOLERANCE).is_ok()
            {
                return h;
            }
        }
    }

    pub fn gain(&self, c: Coord) -> Complex64 {
        self.h[c.row() - 1][c.col() - 1]
    }

    pub fn gains(&self) -> [Complex64; DIM] {
        let mut g = [Complex64::new(0.0, 0.0); DIM];
        for c in Coord::ALL {
            g[c.position()] = self.gain(c);
        }
        g
    }

    pub fn determinant(&self) -> Complex64 {
        let h = &self.h;
        h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
            - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
            + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
    }

    pub fn check_invertible(&self, threshold: f64) -> Result<()> {
        let det = self.determinant().norm();
        if det > threshold {
            Ok(())
        } else {
            Err(Error::SingularChannel { det, threshold })
        }
    }

    /// Closed-form inverse via the adjugate.
    pub fn inverse(&self, threshold: f64) -> Result<ChannelMatrix> {
        self.check_invertible(threshold)?;
        let h = &self.h;
        let det = self.determinant();
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| h[r0][c0] * h[r1][c1] - h[r0][c1] * h[r1][c0];
        // adj[i][j] = cofactor(j, i)
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Ok(ChannelMatrix::from_fn(|i, j| adj[i][j] / det))
    }

    pub fn mul(&self, other: &ChannelMatrix) -> ChannelMatrix {
        ChannelMatrix::from_fn(|i, j| (0..3).map(|k| self.h[i][k] * other.h[k][j]).sum())
    }

    pub fn matvec(&self, x: &[Complex64; 3]) -> [Complex64; 3] {
        let mut y = [Complex64::new(0.0, 0.0); 3];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..3).map(|j| self.h[i][j] * x[j]).sum();
        }
        y
    }

    /// `ν_s = ∏ h_ij^{s_ij}` by direct multiplication.
    pub fn monomial(&self, s: &IndexVector) -> Complex64 {
        monomial_value(self, s)
    }

    /// Generic-position check for depth-`n` schemes: every gain nonzero and
    /// all monomials over `S_{n+1}` pairwise distinct up to a relative tolerance.
    pub fn check_generic(&self, n: usize, tolerance: f64) -> Result<()> {
        if let Some(c) = Coord::ALL.into_iter().find(|&c| self.gain(c) == Complex64::new(0.0, 0.0)) {
            return Err(Error::DegenerateChannel(format!("gain {c} is zero")));
        }
        let cube = IndexCube::new(n + 1);
        let table = MonomialTable::new(self, cube);
        let mut vals: Vec<(Complex64, usize)> = table.values.iter().copied().zip(0..).collect();
        vals.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        for i in 0..vals.len() {
            let (vi, oi) = vals[i];
            for &(vj, oj) in &vals[i + 1..] {
                let scale = vi.norm().max(vj.norm());
                if vj.re - vi.re > tolerance * scale {
                    break;
                }
                if (vi - vj).norm() <= tolerance * scale {
                    return Err(Error::DegenerateChannel(format!(
                        "monomials at {} and {} collide",
                        cube.vector(oi),
                        cube.vector(oj)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn random_gain<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let mag = rng.random_range(0.5..1.5);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(mag, phase)
}

/// `ν_s = ∏_{i,j} h_ij^{s_ij}` in double-precision complex arithmetic.
///
/// Coordinates must be nonnegative.
pub fn monomial_value(h: &ChannelMatrix, s: &IndexVector) -> Complex64 {
    Coord::ALL
        .into_iter()
        .fold(Complex64::new(1.0, 0.0), |acc, c| {
            debug_assert!(s.get(c) >= 0, "negative exponent in monomial");
            acc * h.gain(c).powi(s.get(c))
        })
}

/// Log-domain evaluation: sums `s_ij·ln h_ij` and exponentiates once.
pub fn monomial_value_log(h: &ChannelMatrix, s: &IndexVector) -> Complex64 {
    let log: Complex64 = Coord::ALL
        .into_iter()
        .map(|c| h.gain(c).ln() * s.get(c) as f64)
        .sum();
    log.exp()
}

/// Monomials precomputed over a whole cube, in cube offset order.
#[derive(Debug, Clone)]
pub struct MonomialTable {
    pub cube: IndexCube,
    pub values: Vec<Complex64>,
}

impl MonomialTable {
    pub fn new(h: &ChannelMatrix, cube: IndexCube) -> Self {
        // powers[c][e] = h_c^e for e in 0..=depth
        let depth = cube.depth();
        let powers: Vec<Vec<Complex64>> = Coord::ALL
            .iter()
            .map(|&c| {
                let g = h.gain(c);
                std::iter::successors(Some(Complex64::new(1.0, 0.0)), |p| Some(p * g))
                    .take(depth + 1)
                    .collect()
            })
            .collect();
        let values = cube
            .iter()
            .map(|s| {
                Coord::ALL
                    .iter()
                    .fold(Complex64::new(1.0, 0.0), |acc, &c| {
                        acc * powers[c.position()][s.get(c) as usize]
                    })
            })
            .collect();
        MonomialTable { cube, values }
    }

    pub fn get(&self, s: &IndexVector) -> Option<Complex64> {
        self.cube.offset(s).map(|o| self.values[o])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_gains_give_unit_monomials() {
        let h = ChannelMatrix::ones();
        let s = IndexVector([3, 1, 2, 4, 1, 1, 2, 3, 1]);
        assert_eq!(monomial_value(&h, &s), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn single_factor() {
        let mut h = ChannelMatrix::ones();
        h.h[0][0] = Complex64::new(2.0, 0.0);
        assert_eq!(
            monomial_value(&h, &IndexVector::splat(1)),
            Complex64::new(2.0, 0.0)
        );
    }

    #[test]
    fn all_ones_exponent_is_product_of_gains_log_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let h = ChannelMatrix::random(&mut rng);
            let direct = monomial_value(&h, &IndexVector::splat(1));
            let oracle = monomial_value_log(&h, &IndexVector::splat(1));
            assert!((direct - oracle).norm() <= 1e-12 * oracle.norm());
        }
    }

    #[test]
    fn inverse_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let h = ChannelMatrix::random(&mut rng);
            let Ok(inv) = h.inverse(DEFAULT_SINGULARITY_THRESHOLD) else {
                continue;
            };
            let prod = h.mul(&inv);
            for i in 0..3 {
                for j in 0..3 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((prod.h[i][j] - target).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn singular_channel_rejected() {
        assert!(matches!(
            ChannelMatrix::ones().inverse(DEFAULT_SINGULARITY_THRESHOLD),
            Err(Error::SingularChannel { .. })
        ));
    }

    #[test]
    fn unit_channel_is_not_generic() {
        assert!(matches!(
            ChannelMatrix::ones().check_generic(1, DEFAULT_COLLISION_TOLERANCE),
            Err(Error::DegenerateChannel(_))
        ));
        assert!(ChannelMatrix::identity()
            .check_generic(1, DEFAULT_COLLISION_TOLERANCE)
            .is_err());
    }

    #[test]
    fn random_generic_passes_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = ChannelMatrix::random_generic(&mut rng, 2);
        h.check_generic(2, DEFAULT_COLLISION_TOLERANCE).unwrap();
    }

    #[test]
    fn monomial_table_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = ChannelMatrix::random(&mut rng);
        let table = MonomialTable::new(&h, IndexCube::new(2));
        for s in IndexCube::new(2).iter().step_by(13) {
            let d = monomial_value(&h, &s);
            assert!((table.get(&s).unwrap() - d).norm() <= 1e-12 * d.norm());
        }
    }

    #[test]
    fn illustrating_structure() {
        let base = ChannelMatrix::ones().h;
        let g = Complex64::new(0.5, 2.0);
        let h = ChannelMatrix::illustrating(base, g);
        assert_eq!(h.h[2][0], g * h.h[1][0]);
        assert_eq!(h.h[2][2], g * h.h[1][2]);
    }
}
