//! Seeded xorshift64* generator.
//!
//! Data generators must be byte-reproducible across platforms, so the crate
//! pins one documented 64-bit shift-register generator (xorshift64* with the
//! usual 12/25/27 triple and the `0x2545F4914F6CDD1D` output multiplier)
//! instead of an external RNG whose stream may change between versions.

use nalgebra::DVector;

const MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

/// xorshift64* stream with a Box-Muller cache for Gaussian draws.
#[derive(Debug, Clone)]
pub struct Xorshift64 {
    state: u64,
    spare: Option<f64>,
}

impl Xorshift64 {
    /// A zero seed would lock the shift register at zero; remap it.
    pub fn new(seed: u64) -> Self {
        Xorshift64 {
            state: if seed == 0 { 0x9E37_79B9_7F4A_7C15 } else { seed },
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(MULTIPLIER)
    }

    /// Uniform draw in `[0, 1)` with 53 significant bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Random `+1.0` or `-1.0`.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - uniform() lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Gaussian vector normalized to unit length.
    pub fn unit_vector(&mut self, dim: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(dim, |_, _| self.gaussian());
            let norm = v.norm();
            if norm > 1e-6 {
                return v / norm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_stream() {
        let mut a = Xorshift64::new(42);
        let mut b = Xorshift64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn zero_seed_is_remapped() {
        let mut r = Xorshift64::new(0);
        assert_ne!(r.next_u64(), 0);
    }

    #[test]
    fn uniform_in_range() {
        let mut r = Xorshift64::new(7);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut r = Xorshift64::new(11);
        let n = 200_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z = r.gaussian();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn unit_vector_norm() {
        let mut r = Xorshift64::new(3);
        for dim in [1, 2, 17] {
            let v = r.unit_vector(dim);
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }
}
