//! Portable random streams.
//!
//! Every stochastic operation draws from `ChaCha8Rng` seeded with
//! `seed_from_u64`. Uniforms are built from the top 53 bits of `next_u64`,
//! exponentials by inverse CDF and Poisson counts by sequential inversion, so
//! a second implementation reproduces the same samples from the same stream.
//! Per-trial seeds come from [`derive_seed`], which makes results independent
//! of the order in which trials run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Largest Poisson mean accepted by [`poisson`]; `exp(-lambda)` underflows past ~745.
pub const MAX_POISSON_MEAN: f64 = 700.0;

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `base + GOLDEN * (index + 1)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on [0, 1) with 53 bits of precision.
pub fn uniform<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential with the given rate, `-ln(1 - U) / rate`.
pub fn exponential<R: RngCore>(rng: &mut R, rate: f64) -> f64 {
    -(1.0 - uniform(rng)).ln() / rate
}

/// Poisson count by inversion of the CDF using a single uniform.
pub fn poisson<R: RngCore>(rng: &mut R, mean: f64) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::domain(format!(
            "poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    if mean > MAX_POISSON_MEAN {
        return Err(Error::domain(format!(
            "poisson mean {mean} exceeds inversion limit {MAX_POISSON_MEAN}"
        )));
    }
    let u = uniform(rng);
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        // p has underflowed or the CDF has saturated below u through rounding
        if next == cdf {
            break;
        }
        cdf = next;
    }
    Ok(k)
}
