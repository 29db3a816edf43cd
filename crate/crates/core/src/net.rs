//! A minimal feedforward network: linear layers, ReLU/sigmoid activations,
//! MSE loss, reverse-mode gradients, and plain SGD.
//!
//! Just enough machinery to train the autoencoders the regularizers are
//! studied on. A [`Network`] is an ordered stack of [`Layer`]s; train-mode
//! forwards cache what backward needs, eval-mode forwards are pure and
//! consume no randomness.

use crate::error::{Error, Result};
use crate::reg::{sparseout_jacobian, RegConfig, RegLayer};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::Mode;

/// A fully connected layer computing `x W^T + b` for W of shape (out, in).
#[derive(Debug, Clone)]
pub struct LinearLayer {
    w: Tensor,
    b: Tensor,
    grad_w: Tensor,
    grad_b: Tensor,
    cached_input: Option<Tensor>,
}

impl LinearLayer {
    /// New layer with weights drawn uniformly from
    /// +-sqrt(6 / (fan_in + fan_out)) and zero biases. The scaled range
    /// keeps initial pre-activations of order one for any width, so ReLU
    /// units start out active.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<LinearLayer> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidInput(
                "linear layer dimensions must be at least 1".into(),
            ));
        }
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = rng.uniform_tensor(out_dim, in_dim, -bound, bound);
        Ok(LinearLayer {
            grad_w: Tensor::zeros(out_dim, in_dim),
            grad_b: Tensor::zeros(1, out_dim),
            b: Tensor::zeros(1, out_dim),
            w,
            cached_input: None,
        })
    }

    /// Layer from explicit parameters. W is (out, in), b is (1, out).
    pub fn from_parts(w: Tensor, b: Tensor) -> Result<LinearLayer> {
        if b.rows() != 1 || b.cols() != w.rows() {
            return Err(Error::shape("linear_from_parts", w.shape(), b.shape()));
        }
        Ok(LinearLayer {
            grad_w: Tensor::zeros(w.rows(), w.cols()),
            grad_b: Tensor::zeros(1, w.rows()),
            w,
            b,
            cached_input: None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn w(&self) -> &Tensor {
        &self.w
    }

    pub fn b(&self) -> &Tensor {
        &self.b
    }

    pub fn grad_w(&self) -> &Tensor {
        &self.grad_w
    }

    pub fn grad_b(&self) -> &Tensor {
        &self.grad_b
    }

    /// Resets both gradients to exactly zero.
    pub fn zero_grad(&mut self) {
        self.grad_w.fill(0.0);
        self.grad_b.fill(0.0);
    }

    /// The affine map without caching; shared by eval and frozen passes.
    fn affine(&self, a_prev: &Tensor) -> Result<Tensor> {
        if a_prev.cols() != self.in_dim() {
            return Err(Error::shape(
                "linear_forward",
                a_prev.shape(),
                self.w.shape(),
            ));
        }
        let out = a_prev.matmul_transpose_b(&self.w)?;
        out.add_row_broadcast(&self.b)
    }

    /// Backward through the affine map. Accumulates parameter gradients and
    /// returns the gradient with respect to the input.
    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let x = self
            .cached_input
            .as_ref()
            .ok_or(Error::MissingCache("linear backward without forward"))?;
        if upstream.rows() != x.rows() || upstream.cols() != self.out_dim() {
            return Err(Error::shape("linear_backward", upstream.shape(), x.shape()));
        }
        // dL/dW = upstream^T x, dL/db = column sums, dL/dx = upstream W.
        let dw = upstream.transpose().matmul(x)?;
        self.grad_w.add_assign(&dw)?;
        self.grad_b.add_assign(&upstream.column_sums())?;
        upstream.matmul(&self.w)
    }
}

/// Train-mode affine forward: computes `a_prev W^T + b` and caches the
/// input for the backward pass.
pub fn linear_forward(layer: &mut LinearLayer, a_prev: &Tensor) -> Result<Tensor> {
    let out = layer.affine(a_prev)?;
    layer.cached_input = Some(a_prev.clone());
    Ok(out)
}

/// Eval-mode affine forward: same map, no caching.
pub fn linear_eval(layer: &LinearLayer, a_prev: &Tensor) -> Result<Tensor> {
    layer.affine(a_prev)
}

/// Elementwise max(0, x).
pub fn relu(a: &Tensor) -> Tensor {
    a.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// ReLU gradient: passes upstream where the forward input was strictly
/// positive, zero elsewhere (derivative 0 at exactly 0).
pub fn relu_backward(upstream: &Tensor, input: &Tensor) -> Result<Tensor> {
    if upstream.shape() != input.shape() {
        return Err(Error::shape(
            "relu_backward",
            upstream.shape(),
            input.shape(),
        ));
    }
    let data = upstream
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(upstream.rows(), upstream.cols(), data)
}

pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    // Split by sign so the exponent argument is never positive: no overflow,
    // and large |x| saturates cleanly to 0 or 1.
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Elementwise logistic function 1 / (1 + e^-x).
pub fn sigmoid(a: &Tensor) -> Tensor {
    a.map(sigmoid_scalar)
}

/// Sigmoid gradient from the cached forward output: upstream * s * (1 - s).
pub fn sigmoid_backward(upstream: &Tensor, output: &Tensor) -> Result<Tensor> {
    if upstream.shape() != output.shape() {
        return Err(Error::shape(
            "sigmoid_backward",
            upstream.shape(),
            output.shape(),
        ));
    }
    let data = upstream
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &s)| g * s * (1.0 - s))
        .collect();
    Tensor::from_vec(upstream.rows(), upstream.cols(), data)
}

/// Mean squared error over all elements and its gradient:
/// `L = mean((pred - target)^2)`, `dL/dpred = 2 (pred - target) / N`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse_loss", pred.shape(), target.shape()));
    }
    let n = (pred.rows() * pred.cols()) as f64;
    let diff = pred.sub(target)?;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.scale(2.0 / n);
    Ok((loss, grad))
}

/// A linear layer whose weights are perturbed with a fresh mask per
/// training example (the bridgeout scheme). Reference implementation for
/// cost comparisons; correct, deliberately unoptimized.
///
/// Instead of storing one mask the size of W per example (batch * out * in
/// values), the train-mode forward stores one 64-bit seed per example and
/// regenerates that example's mask stream on demand, in the same row-major
/// draw order, for the frozen and backward passes.
#[derive(Debug, Clone)]
pub struct BridgeoutLinear {
    inner: LinearLayer,
    config: RegConfig,
    mask_seeds: Vec<u64>,
}

impl BridgeoutLinear {
    pub fn new(in_dim: usize, out_dim: usize, config: RegConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        Ok(BridgeoutLinear {
            inner: LinearLayer::new(in_dim, out_dim, rng)?,
            config,
            mask_seeds: Vec::new(),
        })
    }

    pub fn inner(&self) -> &LinearLayer {
        &self.inner
    }

    pub fn config(&self) -> &RegConfig {
        &self.config
    }

    /// One example's affine output under that example's regenerated mask.
    /// `emit_grads`, when given the upstream row, also accumulates weight
    /// gradients and the downstream input gradient for the example.
    fn perturbed_row(
        &self,
        x: &[f64],
        seed: u64,
        out_row: &mut [f64],
        mut grads: Option<(&[f64], &mut Tensor, &mut [f64])>,
    ) {
        let w = &self.inner.w;
        let half_q = self.config.q / 2.0;
        let inv_p = 1.0 / self.config.p;
        let mut mask_rng = Rng::new(seed);
        for o in 0..w.rows() {
            let w_row = w.row(o);
            let mut acc = 0.0;
            for (k, &wv) in w_row.iter().enumerate() {
                let r = if mask_rng.bernoulli(self.config.p) {
                    inv_p
                } else {
                    0.0
                };
                let perturbed = wv + wv.abs().powf(half_q) * (r - 1.0);
                acc += perturbed * x[k];
                if let Some((up_row, grad_w, down_row)) = grads.as_mut() {
                    let g = up_row[o];
                    let j = sparseout_jacobian(wv, r, self.config.q, self.config.eps);
                    grad_w.data_mut()[o * w.cols() + k] += g * j * x[k];
                    down_row[k] += g * perturbed;
                }
            }
            out_row[o] = acc + self.inner.b.data()[o];
        }
    }

    /// Train-mode forward: one fresh seed (hence one fresh mask over all of
    /// W) per example row.
    fn forward_train(&mut self, a_prev: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        if a_prev.cols() != self.inner.in_dim() {
            return Err(Error::shape(
                "bridgeout_forward",
                a_prev.shape(),
                self.inner.w.shape(),
            ));
        }
        self.mask_seeds = (0..a_prev.rows()).map(|_| rng.next_u64()).collect();
        let mut out = Tensor::zeros(a_prev.rows(), self.inner.out_dim());
        let out_dim = self.inner.out_dim();
        for i in 0..a_prev.rows() {
            let seed = self.mask_seeds[i];
            let mut row = vec![0.0; out_dim];
            self.perturbed_row(a_prev.row(i), seed, &mut row, None);
            out.data_mut()[i * out_dim..(i + 1) * out_dim].copy_from_slice(&row);
        }
        self.inner.cached_input = Some(a_prev.clone());
        Ok(out)
    }

    /// Re-applies the masks of the last train-mode forward to a new input.
    fn forward_frozen(&self, a_prev: &Tensor) -> Result<Tensor> {
        if self.mask_seeds.len() != a_prev.rows() {
            return Err(Error::MissingCache(
                "bridgeout frozen forward without matching train forward",
            ));
        }
        let out_dim = self.inner.out_dim();
        let mut out = Tensor::zeros(a_prev.rows(), out_dim);
        for i in 0..a_prev.rows() {
            let mut row = vec![0.0; out_dim];
            self.perturbed_row(a_prev.row(i), self.mask_seeds[i], &mut row, None);
            out.data_mut()[i * out_dim..(i + 1) * out_dim].copy_from_slice(&row);
        }
        Ok(out)
    }

    /// Backward under the same per-example masks, regenerated from the
    /// stored seeds in the identical draw order.
    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let x = self
            .inner
            .cached_input
            .take()
            .ok_or(Error::MissingCache("bridgeout backward without forward"))?;
        if self.mask_seeds.len() != x.rows() {
            return Err(Error::MissingCache(
                "bridgeout backward without matching mask seeds",
            ));
        }
        let out_dim = self.inner.out_dim();
        let in_dim = self.inner.in_dim();
        let mut downstream = Tensor::zeros(x.rows(), in_dim);
        let mut grad_w = Tensor::zeros(out_dim, in_dim);
        let mut scratch = vec![0.0; out_dim];
        for i in 0..x.rows() {
            let (head, tail) = downstream.data_mut().split_at_mut(i * in_dim);
            let _ = head;
            let down_row = &mut tail[..in_dim];
            self.perturbed_row(
                x.row(i),
                self.mask_seeds[i],
                &mut scratch,
                Some((upstream.row(i), &mut grad_w, down_row)),
            );
        }
        self.inner.grad_w.add_assign(&grad_w)?;
        self.inner.grad_b.add_assign(&upstream.column_sums())?;
        self.inner.cached_input = Some(x);
        Ok(downstream)
    }
}

/// One step of a [`Network`] stack.
#[derive(Debug, Clone)]
pub enum Layer {
    Linear(LinearLayer),
    Relu(ReluLayer),
    Sigmoid(SigmoidLayer),
    Reg(RegLayer),
    BridgeoutLinear(BridgeoutLinear),
}

/// ReLU with the cached pre-activation input backward needs.
#[derive(Debug, Clone, Default)]
pub struct ReluLayer {
    cached_input: Option<Tensor>,
}

impl ReluLayer {
    pub fn new() -> ReluLayer {
        ReluLayer::default()
    }
}

/// Sigmoid with the cached output backward needs.
#[derive(Debug, Clone, Default)]
pub struct SigmoidLayer {
    cached_output: Option<Tensor>,
}

impl SigmoidLayer {
    pub fn new() -> SigmoidLayer {
        SigmoidLayer::default()
    }
}

/// An ordered feedforward stack with a train/eval mode switch.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    mode: Mode,
}

impl Network {
    /// Builds a network, checking that consecutive dimension-changing
    /// layers are compatible (activations and regularizers preserve shape).
    pub fn new(layers: Vec<Layer>) -> Result<Network> {
        let mut current: Option<usize> = None;
        for (idx, layer) in layers.iter().enumerate() {
            let dims = match layer {
                Layer::Linear(l) => Some((l.in_dim(), l.out_dim())),
                Layer::BridgeoutLinear(l) => Some((l.inner.in_dim(), l.inner.out_dim())),
                _ => None,
            };
            if let Some((in_dim, out_dim)) = dims {
                if let Some(cur) = current {
                    if cur != in_dim {
                        return Err(Error::InvalidInput(format!(
                            "layer {idx} expects input width {in_dim} but receives {cur}"
                        )));
                    }
                }
                current = Some(out_dim);
            }
        }
        Ok(Network {
            layers,
            mode: Mode::Train,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Forward pass honoring the current mode. Train mode samples fresh
    /// masks from `rng` and fills the caches backward reads; eval mode is
    /// pure, caches nothing, and consumes no randomness.
    pub fn forward(&mut self, x: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        if self.mode == Mode::Eval {
            return self.forward_eval(x);
        }
        let mut a = x.clone();
        for layer in &mut self.layers {
            a = match layer {
                Layer::Linear(l) => linear_forward(l, &a)?,
                Layer::Relu(l) => {
                    let out = relu(&a);
                    l.cached_input = Some(a);
                    out
                }
                Layer::Sigmoid(l) => {
                    let out = sigmoid(&a);
                    l.cached_output = Some(out.clone());
                    out
                }
                Layer::Reg(l) => l.forward(&a, Mode::Train, rng)?,
                Layer::BridgeoutLinear(l) => l.forward_train(&a, rng)?,
            };
        }
        Ok(a)
    }

    /// Deterministic eval forward: regularizers are the identity, nothing
    /// is cached, no RNG exists to be consumed.
    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let mut a = x.clone();
        for layer in &self.layers {
            a = Self::eval_layer(layer, &a)?;
        }
        Ok(a)
    }

    fn eval_layer(layer: &Layer, a: &Tensor) -> Result<Tensor> {
        Ok(match layer {
            Layer::Linear(l) => linear_eval(l, a)?,
            Layer::Relu(_) => relu(a),
            Layer::Sigmoid(_) => sigmoid(a),
            Layer::Reg(_) => a.clone(),
            Layer::BridgeoutLinear(l) => linear_eval(&l.inner, a)?,
        })
    }

    /// Eval forward truncated after `layer_index`, returning that layer's
    /// output. Feeds the activation-sparsity measurements.
    pub fn forward_eval_at(&self, x: &Tensor, layer_index: usize) -> Result<Tensor> {
        if layer_index >= self.layers.len() {
            return Err(Error::InvalidInput(format!(
                "layer index {} out of range for {} layers",
                layer_index,
                self.layers.len()
            )));
        }
        let mut a = x.clone();
        for layer in &self.layers[..=layer_index] {
            a = Self::eval_layer(layer, &a)?;
        }
        Ok(a)
    }

    /// Deterministic forward reusing every stochastic layer's cached masks
    /// from the last train-mode forward. This is the fixed function the
    /// finite-difference gradient checks differentiate.
    pub fn forward_frozen(&self, x: &Tensor) -> Result<Tensor> {
        let mut a = x.clone();
        for layer in &self.layers {
            a = match layer {
                Layer::Linear(l) => linear_eval(l, &a)?,
                Layer::Relu(_) => relu(&a),
                Layer::Sigmoid(_) => sigmoid(&a),
                Layer::Reg(l) => l.forward_frozen(&a)?,
                Layer::BridgeoutLinear(l) => l.forward_frozen(&a)?,
            };
        }
        Ok(a)
    }

    /// Reverse-mode pass: propagates `loss_grad` (gradient of the scalar
    /// loss with respect to the network output) back through every layer,
    /// accumulating parameter gradients. Masks stay fixed at their sampled
    /// values.
    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<()> {
        let mut g = loss_grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = match layer {
                Layer::Linear(l) => l.backward(&g)?,
                Layer::Relu(l) => {
                    let x = l
                        .cached_input
                        .as_ref()
                        .ok_or(Error::MissingCache("relu backward without forward"))?;
                    relu_backward(&g, x)?
                }
                Layer::Sigmoid(l) => {
                    let s = l
                        .cached_output
                        .as_ref()
                        .ok_or(Error::MissingCache("sigmoid backward without forward"))?;
                    sigmoid_backward(&g, s)?
                }
                Layer::Reg(l) => l.backward(&g)?,
                Layer::BridgeoutLinear(l) => l.backward(&g)?,
            };
        }
        Ok(())
    }

    /// Zeroes every parameter gradient.
    pub fn zero_grad(&mut self) {
        for layer in &mut self.layers {
            match layer {
                Layer::Linear(l) => l.zero_grad(),
                Layer::BridgeoutLinear(l) => l.inner.zero_grad(),
                _ => {}
            }
        }
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|t| t.data().len()).sum()
    }

    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Linear(l) => {
                    out.push(&l.w);
                    out.push(&l.b);
                }
                Layer::BridgeoutLinear(l) => {
                    out.push(&l.inner.w);
                    out.push(&l.inner.b);
                }
                _ => {}
            }
        }
        out
    }

    /// Flat parameter read: weights then bias per parameterized layer, in
    /// stack order, row-major within each tensor.
    pub fn get_param(&self, index: usize) -> f64 {
        let mut i = index;
        for t in self.param_tensors() {
            if i < t.data().len() {
                return t.data()[i];
            }
            i -= t.data().len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Flat parameter write mirroring [`Network::get_param`].
    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in &mut self.layers {
            let tensors: [&mut Tensor; 2] = match layer {
                Layer::Linear(l) => [&mut l.w, &mut l.b],
                Layer::BridgeoutLinear(l) => [&mut l.inner.w, &mut l.inner.b],
                _ => continue,
            };
            for t in tensors {
                if i < t.data().len() {
                    t.data_mut()[i] = value;
                    return;
                }
                i -= t.data().len();
            }
        }
        panic!("parameter index {index} out of range");
    }

    fn grad_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Linear(l) => {
                    out.push(&l.grad_w);
                    out.push(&l.grad_b);
                }
                Layer::BridgeoutLinear(l) => {
                    out.push(&l.inner.grad_w);
                    out.push(&l.inner.grad_b);
                }
                _ => {}
            }
        }
        out
    }

    /// Flat gradient read aligned with [`Network::get_param`].
    pub fn get_grad(&self, index: usize) -> f64 {
        let mut i = index;
        for t in self.grad_tensors() {
            if i < t.data().len() {
                return t.data()[i];
            }
            i -= t.data().len();
        }
        panic!("gradient index {index} out of range");
    }
}

/// Plain SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl SgdConfig {
    /// Checks learning_rate > 0 (finite) and batch_size >= 1. Called by
    /// [`train_epoch`]; [`sgd_step`] applies the arithmetic as given so
    /// degenerate values remain observable in isolation.
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidHyperparameter(
                "batch size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One SGD update: every parameter decremented by
/// `learning_rate * gradient`.
pub fn sgd_step(net: &mut Network, cfg: &SgdConfig) {
    let lr = cfg.learning_rate;
    for layer in &mut net.layers {
        let inner = match layer {
            Layer::Linear(l) => l,
            Layer::BridgeoutLinear(l) => &mut l.inner,
            _ => continue,
        };
        for (w, g) in inner.w.data_mut().iter_mut().zip(inner.grad_w.data()) {
            *w -= lr * g;
        }
        for (b, g) in inner.b.data_mut().iter_mut().zip(inner.grad_b.data()) {
            *b -= lr * g;
        }
    }
}

/// One epoch of minibatch SGD: a seeded shuffle of the example order, then
/// per batch a fresh-mask train forward, backward, and SGD step. Returns
/// the mean training loss over examples (each batch's loss weighted by its
/// size).
pub fn train_epoch(
    net: &mut Network,
    data: &Tensor,
    targets: &Tensor,
    cfg: &SgdConfig,
    rng: &mut Rng,
) -> Result<f64> {
    cfg.validate()?;
    if data.rows() == 0 {
        return Err(Error::InvalidInput("train_epoch: empty dataset".into()));
    }
    if data.rows() != targets.rows() {
        return Err(Error::shape("train_epoch", data.shape(), targets.shape()));
    }
    net.set_mode(Mode::Train);
    let n = data.rows();
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);

    let mut weighted_loss = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        let x = data.select_rows(batch)?;
        let t = targets.select_rows(batch)?;
        let out = net.forward(&x, rng)?;
        let (loss, grad) = mse_loss(&out, &t)?;
        net.zero_grad();
        net.backward(&grad)?;
        sgd_step(net, cfg);
        weighted_loss += loss * batch.len() as f64;
    }
    Ok(weighted_loss / n as f64)
}
