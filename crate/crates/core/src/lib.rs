//! Sparseout: stochastic activation sparsification for neural networks.
//!
//! The regularizer perturbs each activation `a` as
//!
//! ```text
//! a~ = a + |a|^(q/2) * (r - 1),    r ~ Bernoulli(p) / p
//! ```
//!
//! which injects noise whose variance matches an L_q penalty on the
//! activations. `q = 2` recovers classic dropout exactly (on the forward
//! values), `q < 2` pushes activations toward sparser configurations, and
//! `q > 2` spreads activity out. The crate provides:
//!
//! * [`tensor`]: a small row-major f64 matrix type and the arithmetic the
//!   training loop needs.
//! * [`rng`]: a seeded, portable random stream and Bernoulli mask sampling.
//! * [`reg`]: sparseout / dropout / bridgeout forward and backward passes.
//! * [`net`]: a minimal feedforward network (linear layers, ReLU / sigmoid,
//!   MSE loss, SGD) that hosts the regularizers between layers.
//! * [`analysis`]: the analytic variance oracle for generalized linear
//!   models, its Monte-Carlo counterpart, and the Hoyer sparsity measure.

pub mod analysis;
pub mod error;
pub mod net;
pub mod reg;
pub mod rng;
pub mod tensor;

pub use analysis::{
    analytic_variance, empirical_variance, hoyer, network_hoyer, quadratic_penalty, GlmSpec,
    SparsityEntry, SparsityReport,
};
pub use error::{Error, Result};
pub use net::{
    linear_eval, linear_forward, mse_loss, relu, relu_backward, sgd_step, sigmoid,
    sigmoid_backward, train_epoch, BridgeoutLinear, Layer, LinearLayer, Network, ReluLayer,
    SgdConfig, SigmoidLayer,
};
pub use reg::{
    bridgeout_forward, dropout_forward, sparseout_backward, sparseout_forward, RegConfig, RegKind,
    RegLayer, DEFAULT_EPS,
};
pub use rng::{bernoulli_mask, Rng};
pub use tensor::{sign, Tensor};

/// Whether a forward pass is part of training (noise on, caches filled) or
/// evaluation (deterministic identity for the regularizers, no RNG use).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
