//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a [`ChaCha8Rng`] seeded with
//! `seed_from_u64`, which is portable and value-stable across platforms.
//! Standard normal variates use `rand_distr::StandardNormal` (ziggurat
//! method); uniform phases use the 53-bit `[0, 1)` float conversion scaled by
//! 2π.
//!
//! Independent sub-streams are derived from a base seed by XOR with a fixed
//! per-role constant ([`split`]), so for instance the observation noise and the
//! input trajectory of a generator never share random numbers. Monte Carlo
//! run seeds come from [`run_seed`], a bijective mix of `(base, index)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Role of a random sub-stream. The discriminants are the XOR constants used
/// by [`split`] and are part of the reproducibility contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    FeatureMap = 0x243f_6a88_85a3_08d3,
    Input = 0x1319_8a2e_0370_7344,
    AuxInput = 0xa409_3822_299f_31d0,
    Noise = 0x082e_fa98_ec4e_6c89,
    Model = 0x4528_21e6_38d0_1377,
    Pairs = 0xbe54_66cf_34e9_0c6c,
}

pub fn split(base: u64, role: StreamRole) -> u64 {
    base ^ role as u64
}

pub fn stream(base: u64, role: StreamRole) -> StreamRng {
    StreamRng::seed_from_u64(split(base, role))
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of Monte Carlo realization `run_index`. Distinct indices give
/// distinct seeds for a fixed base (both steps are bijections on `u64`).
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(run_index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Derives a child seed, e.g. one feature map per filter within a run.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(GOLDEN_GAMMA)))
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform draw on `[0, 2π)`.
#[inline]
pub fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let b = rng.random::<f64>() * TAU;
    if b >= TAU {
        b - TAU
    } else {
        b
    }
}
