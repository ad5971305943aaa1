//! Deterministic helpers shared by unit tests.

use num_complex::Complex64;

use crate::dd::expand_roots;
use crate::signal::Frame;

/// Small deterministic generator (splitmix64) so tests never depend on an
/// external RNG crate or global seed state.
pub struct Prng(pub u64);

impl Prng {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Conjugate-closed random roots in the annulus [0.5, 2.0].
pub fn random_annulus_roots(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = Prng(seed);
    let mut roots = Vec::with_capacity(n);
    while roots.len() + 2 <= n {
        let r = rng.uniform(0.5, 2.0);
        let theta = rng.uniform(0.05, std::f64::consts::PI - 0.05);
        let z = Complex64::from_polar(r, theta);
        roots.push(z);
        roots.push(z.conj());
    }
    if roots.len() < n {
        let sign = if rng.next() % 2 == 0 { 1.0 } else { -1.0 };
        roots.push(Complex64::new(sign * rng.uniform(0.5, 2.0), 0.0));
    }
    roots
}

/// Real coefficient vector of `gain · Π (z - r_m)` for conjugate-closed
/// roots.
pub fn real_coeffs(roots: &[Complex64], gain: f64) -> Vec<f64> {
    expand_roots(roots, gain).iter().map(|c| c.re).collect()
}

pub fn frame_of(samples: Vec<f64>) -> Frame {
    Frame::from_windowed(samples, 0, None).unwrap()
}

pub fn frame_from_roots(roots: &[Complex64], gain: f64) -> Frame {
    frame_of(real_coeffs(roots, gain))
}
