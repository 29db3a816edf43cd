//! Seeded random number generation with a portable, reproducible stream.
//!
//! [`Rng`] wraps a ChaCha8 block cipher stream (via the `rand_chacha`
//! crate). ChaCha is counter-based and specified byte-for-byte, so a given
//! seed yields the same draw sequence on every platform and build. The
//! wrapper counts draws, which lets tests assert that eval-mode code paths
//! consume no randomness at all.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Scale factor turning a 53-bit integer into a float in [0, 1).
const F64_FROM_53_BITS: f64 = 1.0 / (1u64 << 53) as f64;

/// A seeded random stream.
///
/// Cloning copies the full state; two clones produce identical draws.
/// Equality compares seed and draw count, which identifies a stream
/// position uniquely for streams created through this wrapper.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    draws: u64,
    stream: ChaCha8Rng,
}

impl PartialEq for Rng {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.draws == other.draws
    }
}

impl Rng {
    /// Creates a stream from a 64-bit seed.
    pub fn new(seed: u64) -> Rng {
        Rng {
            seed,
            draws: 0,
            stream: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// How many raw 64-bit draws have been consumed so far.
    pub fn draw_count(&self) -> u64 {
        self.draws
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.stream.next_u64()
    }

    /// Uniform value in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * F64_FROM_53_BITS
    }

    /// Bernoulli trial: true with probability `p`.
    ///
    /// Always consumes exactly one draw, including at p = 1, so code paths
    /// that differ only in `p` stay aligned on the same stream positions.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform value in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Tensor with every element drawn independently from U[lo, hi).
    /// Elements are drawn in row-major order.
    pub fn uniform_tensor(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
        let data = (0..rows * cols).map(|_| self.uniform(lo, hi)).collect();
        Tensor::from_vec(rows, cols, data).expect("length matches by construction")
    }

    /// Fisher-Yates shuffle in place.
    ///
    /// Index selection uses `next_u64() % n`; the modulo bias is below
    /// 2^-50 for any slice that fits in memory and the mapping is fully
    /// deterministic, which is what reproducibility requires.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}

/// Validates a keep-probability: finite and in (0, 1].
pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(Error::InvalidHyperparameter(format!(
            "keep probability p must be in (0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Samples a `rows x cols` mask whose elements are independently `1/p` with
/// probability `p` and `0` otherwise, so every element has expectation 1.
///
/// Elements are drawn in row-major order, one Bernoulli trial per element.
pub fn bernoulli_mask(rows: usize, cols: usize, p: f64, rng: &mut Rng) -> Result<Tensor> {
    check_probability(p)?;
    let inv_p = 1.0 / p;
    let data = (0..rows * cols)
        .map(|_| if rng.bernoulli(p) { inv_p } else { 0.0 })
        .collect();
    Tensor::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_mask() {
        let mut a = Rng::new(1234);
        let mut b = Rng::new(1234);
        let ma = bernoulli_mask(20, 50, 0.5, &mut a).unwrap();
        let mb = bernoulli_mask(20, 50, 0.5, &mut b).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn different_seeds_differ_on_large_mask() {
        let mut a = Rng::new(1);
        let mut b = Rng::new(2);
        let ma = bernoulli_mask(20, 50, 0.5, &mut a).unwrap();
        let mb = bernoulli_mask(20, 50, 0.5, &mut b).unwrap();
        assert_ne!(ma, mb, "1000-element masks from different seeds collide");
    }

    #[test]
    fn mask_values_are_exactly_zero_or_inverse_p() {
        let p = 0.7;
        let mut rng = Rng::new(9);
        let m = bernoulli_mask(10, 10, p, &mut rng).unwrap();
        let inv_p = 1.0 / p;
        assert!(m.data().iter().all(|&v| v == 0.0 || v == inv_p));
        assert!(m.data().contains(&0.0));
        assert!(m.data().contains(&inv_p));
    }

    #[test]
    fn mask_with_p_one_is_all_ones() {
        let mut rng = Rng::new(5);
        let m = bernoulli_mask(4, 4, 1.0, &mut rng).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
        // The degenerate case still consumes one draw per element, keeping
        // stream positions aligned across different p values.
        assert_eq!(rng.draw_count(), 16);
    }

    #[test]
    fn mask_mean_and_variance_match_theory() {
        // E[r] = 1 and Var[r] = (1 - p) / p = 1 at p = 0.5.
        let mut rng = Rng::new(2024);
        let n = 100_000;
        let m = bernoulli_mask(n, 1, 0.5, &mut rng).unwrap();
        let mean = m.sum() / n as f64;
        assert!((0.99..=1.01).contains(&mean), "mean {mean} out of range");
        let var = m
            .data()
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        assert!((0.97..=1.03).contains(&var), "variance {var} out of range");
    }

    #[test]
    fn mask_rejects_invalid_p() {
        let mut rng = Rng::new(0);
        for bad in [0.0, -0.25, 1.0001, f64::NAN, f64::INFINITY] {
            let err = bernoulli_mask(2, 2, bad, &mut rng).unwrap_err();
            assert!(matches!(err, Error::InvalidHyperparameter(_)));
        }
    }

    #[test]
    fn clones_replay_the_same_stream() {
        let mut a = Rng::new(42);
        a.next_f64();
        let mut b = a.clone();
        assert_eq!(a, b);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn shuffle_is_a_seeded_permutation() {
        let mut idx: Vec<usize> = (0..100).collect();
        let mut rng = Rng::new(7);
        rng.shuffle(&mut idx);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());

        let mut idx2: Vec<usize> = (0..100).collect();
        let mut rng2 = Rng::new(7);
        rng2.shuffle(&mut idx2);
        assert_eq!(idx, idx2, "same seed must give the same order");

        let mut idx3: Vec<usize> = (0..100).collect();
        let mut rng3 = Rng::new(8);
        rng3.shuffle(&mut idx3);
        assert_ne!(idx, idx3, "different seeds should give different orders");
    }

    #[test]
    fn next_f64_stays_in_unit_interval() {
        let mut rng = Rng::new(99);
        for _ in 0..10_000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }
}
