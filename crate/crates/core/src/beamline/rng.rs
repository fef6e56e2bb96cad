//! Portable random streams.
//!
//! * Generator: xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
//! * Uniform doubles: `(next_u64 >> 11) * 2^-53`, in [0, 1).
//! * Poisson: multiplication method for λ < 10, PTRS (Hörmann 1993) above,
//!   in the same arrangement as NumPy's legacy generator.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for the `index`-th child of `parent`: the SplitMix64 finalizer
/// applied to `parent + (index + 1)·0x9E3779B97F4A7C15`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct PortableRng(Xoshiro256PlusPlus);

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        PortableRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One Poisson deviate. λ ≤ 0 returns 0 without consuming the stream.
    pub fn poisson(&mut self, lam: f64) -> u64 {
        if !(lam > 0.0) {
            return 0;
        }
        if lam < 10.0 {
            let enlam = (-lam).exp();
            let mut x = 0;
            let mut prod = 1.0;
            loop {
                prod *= self.next_f64();
                if prod > enlam {
                    x += 1;
                } else {
                    return x;
                }
            }
        }
        self.ptrs(lam)
    }

    fn ptrs(&mut self, lam: f64) -> u64 {
        let slam = lam.sqrt();
        let loglam = lam.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let invalpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_f64();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lam + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if v.ln() + invalpha.ln() - (a / (us * us) + b).ln()
                <= -lam + k * loglam - libm::lgamma(k + 1.0)
            {
                return k as u64;
            }
        }
    }
}
