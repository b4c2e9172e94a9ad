//! Seed discipline: one root seed, independent ChaCha streams per trial and purpose.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a derived stream is used for; keeps e.g. channel draws and noise draws
/// of the same trial independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Channel = 1,
    Symbols = 2,
    Noise = 3,
    Detection = 4,
    Lemma = 5,
}

/// Counter-based split: the stream id encodes `(trial, purpose, sub)`, so any
/// trial can be regenerated in isolation from the root seed.
pub fn stream_rng(root: u64, trial: u64, purpose: Purpose, sub: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    let id = (trial << 24) | ((purpose as u64) << 16) | u64::from(sub & 0xffff);
    rng.set_stream(id);
    rng
}

/// Circularly-symmetric complex Gaussian with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

pub fn unit_noise_triple<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 3] {
    [(); 3].map(|_| complex_gaussian(rng, 1.0))
}
