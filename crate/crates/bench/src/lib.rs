//! Shared fixtures for the regularizer microbenchmarks.
//!
//! Everything here is deterministic so benchmark runs compare the same
//! arithmetic across revisions.

use sparseout::{Mode, RegConfig, RegKind, RegLayer, Rng, Tensor};

/// Activation batch with entries in [-2, 2], seeded for reproducibility.
pub fn activation_batch(rows: usize, cols: usize, seed: u64) -> Tensor {
    Rng::new(seed).uniform_tensor(rows, cols, -2.0, 2.0)
}

/// A sparseout layer at the given q (p fixed at 0.5) that has already run
/// one train-mode forward, so its mask and input caches are populated and
/// backward can be benchmarked in isolation.
pub fn primed_layer(a: &Tensor, q: f64, seed: u64) -> RegLayer {
    let kind = if q == 2.0 {
        RegKind::Dropout
    } else {
        RegKind::Sparseout
    };
    let mut layer =
        RegLayer::new(kind, RegConfig::new(0.5, q).expect("valid config")).expect("valid layer");
    let mut rng = Rng::new(seed);
    layer
        .forward(a, Mode::Train, &mut rng)
        .expect("forward succeeds");
    layer
}
