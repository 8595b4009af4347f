//! Seeded sample generation.
//!
//! Every randomized estimator in this crate derives its randomness from an
//! explicit 64-bit seed through the fixed construction below, which never
//! changes silently:
//!
//! * stream keys are derived with SplitMix64 from `(seed, stream)`;
//! * the generator is ChaCha8 keyed by four SplitMix64 outputs;
//! * uniform doubles take the top 53 bits of `next_u64`;
//! * normal variates use the Box-Muller transform on two uniforms.
//!
//! Giving every trial its own stream index makes sample `i` independent of
//! how many threads the run used.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dyadic::DyadicStep;
use crate::walsh::{ChaosCoeffs, ChaosPair, SignPattern};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the SplitMix64 sequence.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-stream generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(SPLITMIX_GAMMA);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw (Box-Muller).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - unit_f64(rng); // (0, 1]
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// All pairs `(i, j)` with `1 <= i < j <= max_index` in linear order.
pub fn all_pairs(max_index: u32) -> Vec<ChaosPair> {
    let mut pairs = Vec::new();
    for j in 2..=max_index {
        for i in 1..j {
            pairs.push(ChaosPair::new(i, j).expect("i < j by construction"));
        }
    }
    pairs.sort();
    pairs
}

/// The first `count` pairs of the linear ordering.
pub fn prefix_pairs(count: u64) -> Vec<ChaosPair> {
    (1..=count)
        .map(|m| ChaosPair::from_linear(m).expect("positions start at 1"))
        .collect()
}

/// I.i.d. standard normal coefficients on `pairs`.
pub fn gaussian_coeffs(pairs: &[ChaosPair], rng: &mut ChaCha8Rng) -> ChaosCoeffs {
    let mut coeffs = ChaosCoeffs::new();
    for &pair in pairs {
        coeffs.set(pair, standard_normal(rng));
    }
    coeffs
}

/// Sparse coefficients: each entry is `+1` or `-1` with probability
/// `density`, zero otherwise. Two uniforms are consumed per pair so the
/// stream layout does not depend on the drawn values.
pub fn sparse_pm_coeffs(pairs: &[ChaosPair], density: f64, rng: &mut ChaCha8Rng) -> ChaosCoeffs {
    let mut coeffs = ChaosCoeffs::new();
    for &pair in pairs {
        let active = unit_f64(rng) < density;
        let sign = if unit_f64(rng) < 0.5 { 1.0 } else { -1.0 };
        coeffs.set(pair, if active { sign } else { 0.0 });
    }
    coeffs
}

/// Random sign pattern on `pairs`.
pub fn random_pattern(pairs: &[ChaosPair], rng: &mut ChaCha8Rng) -> SignPattern {
    let mut pattern = SignPattern::new();
    for &pair in pairs {
        let sign = if unit_f64(rng) < 0.5 { 1 } else { -1 };
        pattern.set(pair, sign).expect("sign is +1 or -1");
    }
    pattern
}

/// Step function with i.i.d. uniform cell values in `[-amplitude, amplitude)`.
pub fn random_step(level: u32, amplitude: f64, rng: &mut ChaCha8Rng) -> DyadicStep {
    assert!(level <= crate::dyadic::MAX_LEVEL, "level {level} too large");
    let cells = 1usize << level;
    let values: Vec<f64> = (0..cells)
        .map(|_| amplitude * (2.0 * unit_f64(rng) - 1.0))
        .collect();
    DyadicStep::new(level, values).expect("finite values of the right length")
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform_in(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut rng = stream_rng(7, 3);
            (0..8).map(|_| rng.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut rng = stream_rng(7, 3);
            (0..8).map(|_| rng.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut rng = stream_rng(7, 4);
            (0..8).map(|_| rng.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = stream_rng(42, 0);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn prefix_pairs_follow_linear_order() {
        let pairs = prefix_pairs(6);
        let as_tuples: Vec<(u32, u32)> = pairs.iter().map(|p| (p.i(), p.j())).collect();
        assert_eq!(
            as_tuples,
            vec![(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]
        );
    }
}
