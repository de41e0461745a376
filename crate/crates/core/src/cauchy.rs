//! The Cauchy distribution `C(a, γ)`.
//!
//! Location `a` is both median and mode; scale `γ` is the half-width at
//! half-maximum. Draws use inversion, `X = a + γ tan(π(U − ½))`, with `U`
//! taken from an injected RNG so every experiment is reproducible from a
//! seed. The crate-wide generator is [`rand_chacha::ChaCha8Rng`]; see
//! [`seeded_rng`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Location and scale of a Cauchy distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    pub a: f64,
    pub gamma: f64,
}

impl CauchyParams {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if a.is_finite() && gamma.is_finite() && gamma > 0.0 {
            Ok(Self { a, gamma })
        } else {
            Err(Error::InvalidParams { a, gamma })
        }
    }

    pub const fn standard() -> Self {
        Self { a: 0.0, gamma: 1.0 }
    }

    /// Euclidean norm of `(a, γ)`, used by the relative stopping rule.
    pub fn norm(&self) -> f64 {
        self.a.hypot(self.gamma)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.a - other.a).hypot(self.gamma - other.gamma)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let t = (x - self.a) / self.gamma;
        1.0 / (PI * self.gamma * (t * t + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / self.gamma).atan() / PI + 0.5
    }

    /// Inverse CDF. `u` must lie in the open interval (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        self.a + self.gamma * (PI * (u - 0.5)).tan()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.quantile(open_uniform(rng))).collect()
    }
}

impl Default for CauchyParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// Density of `C(a, γ)` at `x`.
pub fn pdf(params: &CauchyParams, x: f64) -> f64 {
    params.pdf(x)
}

pub fn cdf(params: &CauchyParams, x: f64) -> f64 {
    params.cdf(x)
}

/// `count` i.i.d. draws from `C(a, γ)` by inversion.
pub fn sample<R: Rng + ?Sized>(params: &CauchyParams, rng: &mut R, count: usize) -> Vec<f64> {
    params.sample(rng, count)
}

/// A uniform draw from the open interval (0, 1); endpoints are redrawn.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// The generator used throughout the crate: ChaCha8 seeded from a `u64`,
/// optionally switched to an independent `stream` (trial index, image id).
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
