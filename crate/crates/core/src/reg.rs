//! Stochastic regularizers: sparseout, dropout, and a reference bridgeout.
//!
//! Sparseout perturbs each activation `a` during training as
//!
//! ```text
//! a~ = a + |a|^(q/2) * (r - 1),    r = Bernoulli(p) / p
//! ```
//!
//! so the injected noise has variance ((1-p)/p) * |a|^q, i.e. the strength
//! of an L_q penalty on the activation. The unified form above reproduces
//! both mask branches exactly: r = 0 gives `a - |a|^(q/2)` and r = 1/p gives
//! `a + |a|^(q/2) (1-p)/p`.
//!
//! The exact derivative of the perturbed output with respect to `a` (mask
//! held fixed) is
//!
//! ```text
//! J = 1 + (q/2) * |a|^(q/2 - 1) * (r - 1) * sign(a)
//! ```
//!
//! For q < 2 the factor |a|^(q/2-1) blows up as a -> 0, so the backward
//! pass clamps |a| to `eps` inside that factor, and defines J = 1 exactly
//! at a = 0 (the perturbation term is given zero subgradient at the
//! origin). The forward pass is never clamped.
//!
//! Setting q = 2 makes the perturbation `a + |a| (r - 1)`, which equals
//! `r * a` elementwise on non-negative activations: classic dropout.
//! [`dropout_forward`] implements dropout directly; both regularizers draw
//! their masks identically, so a shared seed yields bitwise-equal masks.
//!
//! Bridgeout applies the same perturbation to a weight matrix instead,
//! with a fresh mask over all of W for every training example. It exists
//! here as a correct but deliberately unoptimized reference for cost
//! comparisons; see [`bridgeout_forward`].

use crate::error::{Error, Result};
use crate::rng::{bernoulli_mask, check_probability, Rng};
use crate::tensor::{sign, Tensor};
use crate::Mode;

/// Default clamp radius for the q < 2 gradient singularity.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Hyperparameters of the sparseout family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegConfig {
    /// Keep probability of the Bernoulli mask, in (0, 1].
    pub p: f64,
    /// Norm exponent; q = 2 recovers dropout, q < 2 promotes sparsity.
    pub q: f64,
    /// Clamp radius shielding the q < 2 gradient singularity at a = 0.
    pub eps: f64,
}

impl RegConfig {
    /// Config with the default `eps` of 1e-6.
    pub fn new(p: f64, q: f64) -> Result<RegConfig> {
        RegConfig::with_eps(p, q, DEFAULT_EPS)
    }

    /// Config with an explicit singularity guard.
    pub fn with_eps(p: f64, q: f64, eps: f64) -> Result<RegConfig> {
        let cfg = RegConfig { p, q, eps };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The dropout configuration: q exactly 2 (stored as the literal 2.0,
    /// so the q = 2 code paths stay bit-exact).
    pub fn dropout(p: f64) -> Result<RegConfig> {
        RegConfig::new(p, 2.0)
    }

    /// Checks 0 < p <= 1, q > 0, eps > 0, all finite.
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        if !self.q.is_finite() || self.q <= 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "norm exponent q must be positive, got {}",
                self.q
            )));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "singularity guard eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Which regularizer a [`RegLayer`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    /// Multiplicative masking `r * a` (the q = 2 special case, implemented
    /// directly).
    Dropout,
    /// The general `a + |a|^(q/2) (r - 1)` perturbation.
    Sparseout,
}

/// An activation-space regularizer with the cached state backward needs.
///
/// Train-mode forwards cache the input and the sampled mask; eval-mode
/// forwards are the identity, cache nothing, and read no randomness.
#[derive(Debug, Clone)]
pub struct RegLayer {
    pub kind: RegKind,
    pub config: RegConfig,
    cached_input: Option<Tensor>,
    cached_mask: Option<Tensor>,
}

impl RegLayer {
    pub fn new(kind: RegKind, config: RegConfig) -> Result<RegLayer> {
        config.validate()?;
        if kind == RegKind::Dropout && config.q != 2.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "dropout is the q = 2 case; got q = {}",
                config.q
            )));
        }
        Ok(RegLayer {
            kind,
            config,
            cached_input: None,
            cached_mask: None,
        })
    }

    pub fn sparseout(config: RegConfig) -> Result<RegLayer> {
        RegLayer::new(RegKind::Sparseout, config)
    }

    pub fn dropout(p: f64) -> Result<RegLayer> {
        RegLayer::new(RegKind::Dropout, RegConfig::dropout(p)?)
    }

    /// The mask sampled by the last train-mode forward, if any.
    pub fn cached_mask(&self) -> Option<&Tensor> {
        self.cached_mask.as_ref()
    }

    /// The input cached by the last train-mode forward, if any.
    pub fn cached_input(&self) -> Option<&Tensor> {
        self.cached_input.as_ref()
    }

    /// Drops cached state.
    pub fn clear_cache(&mut self) {
        self.cached_input = None;
        self.cached_mask = None;
    }

    /// Applies the configured regularizer. Train mode samples a fresh mask
    /// (one Bernoulli element per activation element, row-major) and caches
    /// input and mask; eval mode returns the input unchanged.
    pub fn forward(&mut self, a: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        match self.kind {
            RegKind::Sparseout => sparseout_forward(self, a, mode, rng),
            RegKind::Dropout => {
                if mode == Mode::Eval {
                    return Ok(a.clone());
                }
                let mask = bernoulli_mask(a.rows(), a.cols(), self.config.p, rng)?;
                let out = a.mul(&mask)?;
                self.cached_input = Some(a.clone());
                self.cached_mask = Some(mask);
                Ok(out)
            }
        }
    }

    /// Routes to the matching backward rule: sparseout uses the exact
    /// Jacobian, dropout multiplies by the cached mask.
    pub fn backward(&self, upstream: &Tensor) -> Result<Tensor> {
        match self.kind {
            RegKind::Sparseout => sparseout_backward(upstream, self),
            RegKind::Dropout => {
                let mask = self
                    .cached_mask
                    .as_ref()
                    .ok_or(Error::MissingCache("dropout backward without forward"))?;
                upstream.mul(mask)
            }
        }
    }

    /// Re-applies the cached mask to a new input without sampling: the
    /// deterministic map the finite-difference gradient checks probe.
    pub fn forward_frozen(&self, a: &Tensor) -> Result<Tensor> {
        let mask = self
            .cached_mask
            .as_ref()
            .ok_or(Error::MissingCache("frozen forward without cached mask"))?;
        match self.kind {
            RegKind::Sparseout => apply_sparseout(a, mask, self.config.q),
            RegKind::Dropout => a.mul(mask),
        }
    }
}

/// The sparseout map for a fixed, already-sampled mask.
fn apply_sparseout(a: &Tensor, mask: &Tensor, q: f64) -> Result<Tensor> {
    if a.shape() != mask.shape() {
        return Err(Error::ShapeMismatch {
            op: "sparseout",
            lhs_rows: a.rows(),
            lhs_cols: a.cols(),
            rhs_rows: mask.rows(),
            rhs_cols: mask.cols(),
        });
    }
    let half_q = q / 2.0;
    let data = a
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &r)| v + v.abs().powf(half_q) * (r - 1.0))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data)
}

/// Sparseout training perturbation.
///
/// Eval mode returns `a` unchanged without touching the RNG; inference
/// needs no adjustment because the mask has expectation 1. Train mode
/// samples one mask element per activation element, computes
/// `a + |a|^(q/2) (r - 1)`, and caches `a` and the mask on `layer` for the
/// backward pass.
pub fn sparseout_forward(
    layer: &mut RegLayer,
    a: &Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Result<Tensor> {
    layer.config.validate()?;
    if mode == Mode::Eval {
        return Ok(a.clone());
    }
    let mask = bernoulli_mask(a.rows(), a.cols(), layer.config.p, rng)?;
    let out = apply_sparseout(a, &mask, layer.config.q)?;
    layer.cached_input = Some(a.clone());
    layer.cached_mask = Some(mask);
    Ok(out)
}

/// Derivative of the sparseout perturbation at one element, mask held fixed.
///
/// `J = 1 + (q/2) |a|^(q/2-1) (r-1) sign(a)`, with two guards:
/// exactly zero input gives J = 1 (zero subgradient for the perturbation
/// term at the origin), and for q < 2 the singular factor |a|^(q/2-1) is
/// evaluated at eps whenever |a| < eps.
pub(crate) fn sparseout_jacobian(a: f64, r: f64, q: f64, eps: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    let mut magnitude = a.abs();
    if q < 2.0 && magnitude < eps {
        magnitude = eps;
    }
    1.0 + (q / 2.0) * magnitude.powf(q / 2.0 - 1.0) * (r - 1.0) * sign(a)
}

/// Sparseout backward pass: `upstream` times the elementwise Jacobian of
/// the last train-mode forward.
pub fn sparseout_backward(upstream: &Tensor, layer: &RegLayer) -> Result<Tensor> {
    let (a, mask) = match (&layer.cached_input, &layer.cached_mask) {
        (Some(a), Some(m)) => (a, m),
        _ => return Err(Error::MissingCache("sparseout backward without forward")),
    };
    if upstream.shape() != a.shape() {
        return Err(Error::ShapeMismatch {
            op: "sparseout_backward",
            lhs_rows: upstream.rows(),
            lhs_cols: upstream.cols(),
            rhs_rows: a.rows(),
            rhs_cols: a.cols(),
        });
    }
    let q = layer.config.q;
    let eps = layer.config.eps;
    let mut out = upstream.clone();
    for ((g, &v), &r) in out.data_mut().iter_mut().zip(a.data()).zip(mask.data()) {
        *g *= sparseout_jacobian(v, r, q, eps);
    }
    Ok(out)
}

/// Stateless dropout: train mode returns `r (.) a` with the same mask
/// convention as sparseout (elements 0 or 1/p, drawn row-major); eval mode
/// returns `a` unchanged and reads no randomness.
pub fn dropout_forward(a: &Tensor, p: f64, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
    check_probability(p)?;
    if mode == Mode::Eval {
        return Ok(a.clone());
    }
    let mask = bernoulli_mask(a.rows(), a.cols(), p, rng)?;
    a.mul(&mask)
}

/// Bridgeout reference forward: the sparseout perturbation applied to the
/// weight matrix, with a fresh mask over all of `w` for every training
/// example.
///
/// For each row `x` of `a_prev`, samples an independent mask the size of
/// `w` (row-major over `w`), perturbs every weight as
/// `w + |w|^(q/2) (r - 1)`, and emits `x` times the perturbed transpose:
/// output shape (a_prev.rows, w.rows), matching a bias-free linear layer
/// with `w` of shape (out, in).
///
/// Deliberately unoptimized: the perturbation (including the per-element
/// power) is recomputed for every example, which is the honest unit cost a
/// per-example weight-space regularizer pays. Use [`Rng::draw_count`] to
/// see the mask volume: batch * out * in draws per call.
pub fn bridgeout_forward(
    w: &Tensor,
    a_prev: &Tensor,
    cfg: &RegConfig,
    rng: &mut Rng,
) -> Result<Tensor> {
    cfg.validate()?;
    if a_prev.cols() != w.cols() {
        return Err(Error::ShapeMismatch {
            op: "bridgeout_forward",
            lhs_rows: a_prev.rows(),
            lhs_cols: a_prev.cols(),
            rhs_rows: w.rows(),
            rhs_cols: w.cols(),
        });
    }
    let half_q = cfg.q / 2.0;
    let inv_p = 1.0 / cfg.p;
    let mut out = Tensor::zeros(a_prev.rows(), w.rows());
    for i in 0..a_prev.rows() {
        let x = a_prev.row(i);
        let o_row = &mut out.data_mut()[i * w.rows()..(i + 1) * w.rows()];
        for (o, out_val) in o_row.iter_mut().enumerate() {
            let w_row = w.row(o);
            let mut acc = 0.0;
            for (k, &wv) in w_row.iter().enumerate() {
                let r = if rng.bernoulli(cfg.p) { inv_p } else { 0.0 };
                let perturbed = wv + wv.abs().powf(half_q) * (r - 1.0);
                acc += perturbed * x[k];
            }
            *out_val = acc;
        }
    }
    Ok(out)
}
