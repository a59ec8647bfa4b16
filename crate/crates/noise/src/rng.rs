//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, class, a, b, c)`, so results
//! never depend on call order or thread count. Distinct stream classes
//! keep the particle engine, the mixer and the Monte-Carlo harnesses from
//! ever sharing counters.

use std::f64::consts::TAU;

pub const CLASS_PARTICLES: u64 = 0x01;
pub const CLASS_MIX: u64 = 0x02;
pub const CLASS_CALIBRATION: u64 = 0x03;
pub const CLASS_INDEPENDENT: u64 = 0x04;
pub const CLASS_VIDEO: u64 = 0x05;
pub const CLASS_NOISE: u64 = 0x06;
pub const CLASS_PROBE: u64 = 0x07;
pub const CLASS_LEVEL: u64 = 0x08;

const SALT: u64 = 0xEC0D_9A5B_71F3_2C44;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; full-avalanche 64-bit mixing.
#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// A keyed counter stream. Cheap to copy; all methods are pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, class: u64) -> Self {
        Self { key: mix64(seed ^ mix64(class.wrapping_mul(GOLDEN) ^ SALT)) }
    }

    /// Raw 64-bit word for counter `(a, b, c)`.
    #[inline]
    pub fn raw(&self, a: u64, b: u64, c: u64) -> u64 {
        let mut h = self.key;
        h = mix64(h ^ a.wrapping_mul(GOLDEN));
        h = mix64(h ^ b.wrapping_mul(GOLDEN));
        mix64(h ^ c.wrapping_mul(GOLDEN))
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, a: u64, b: u64, c: u64) -> f64 {
        (self.raw(a, b, c) >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Pair of independent standard normals via Box-Muller. The first
    /// uniform is shifted into `(0, 1]` so the log never sees zero.
    #[inline]
    pub fn normal_pair(&self, a: u64, b: u64, c: u64) -> (f64, f64) {
        let u1 = ((self.raw(a, b, c.wrapping_mul(2)) >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
        let u2 = (self.raw(a, b, c.wrapping_mul(2).wrapping_add(1)) >> 11) as f64
            * (1.0 / 9007199254740992.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, cos) = (TAU * u2).sin_cos();
        (r * cos, r * s)
    }

    /// Single standard normal for counter `(a, b, c)`.
    #[inline]
    pub fn standard_normal(&self, a: u64, b: u64, c: u64) -> f64 {
        self.normal_pair(a, b, c).0
    }
}
