//! Verification instruments: the Hoyer sparsity measure and the
//! generalized-linear-model variance oracle.
//!
//! For a GLM with design matrix X and coefficients beta, perturbing the
//! features of row i with the sparseout mask gives
//!
//! ```text
//! X~_ij = X_ij * (1 + |X_ij|^((q-2)/2) * (r_j - 1))
//! ```
//!
//! whose linear predictor has closed-form variance
//!
//! ```text
//! Var[X~_i . beta] = ((1-p)/p) * sum_j |X_ij|^q beta_j^2
//! ```
//!
//! i.e. an L_q penalty on the coefficient-weighted features. This module
//! provides that closed form ([`analytic_variance`]), a Monte-Carlo
//! estimator of the same quantity ([`empirical_variance`]) so the two can
//! cross-check each other, and the resulting quadratic regularization
//! penalty ([`quadratic_penalty`]).
//!
//! [`hoyer`] measures how sparse a vector is on a [0, 1] scale, and
//! [`network_hoyer`] averages it over a layer's activations across a
//! dataset.

use crate::error::{Error, Result};
use crate::net::{sigmoid_scalar, Network};
use crate::reg::RegConfig;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// A generalized linear model instance: design matrix, coefficients, and
/// the second derivative of the log-partition function evaluated at the
/// linear predictor.
#[derive(Debug, Clone)]
pub struct GlmSpec {
    x: Tensor,
    beta: Tensor,
    second_deriv: fn(f64) -> f64,
}

fn linear_second_deriv(_z: f64) -> f64 {
    1.0
}

fn logistic_second_deriv(z: f64) -> f64 {
    let s = sigmoid_scalar(z);
    s * (1.0 - s)
}

impl GlmSpec {
    /// GLM with an arbitrary log-partition second derivative.
    pub fn new(x: Tensor, beta: Tensor, second_deriv: fn(f64) -> f64) -> Result<GlmSpec> {
        if x.rows() == 0 {
            return Err(Error::InvalidInput(
                "glm needs at least one design row".into(),
            ));
        }
        if beta.cols() != 1 || beta.rows() != x.cols() {
            return Err(Error::shape("glm_spec", x.shape(), beta.shape()));
        }
        Ok(GlmSpec {
            x,
            beta,
            second_deriv,
        })
    }

    /// Linear regression: A'' = 1.
    pub fn linear(x: Tensor, beta: Tensor) -> Result<GlmSpec> {
        GlmSpec::new(x, beta, linear_second_deriv)
    }

    /// Logistic regression: A''(z) = s(z) (1 - s(z)).
    pub fn logistic(x: Tensor, beta: Tensor) -> Result<GlmSpec> {
        GlmSpec::new(x, beta, logistic_second_deriv)
    }

    pub fn x(&self) -> &Tensor {
        &self.x
    }

    pub fn beta(&self) -> &Tensor {
        &self.beta
    }

    /// Number of design rows.
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Feature dimension.
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    fn check_row(&self, row_i: usize) -> Result<()> {
        if row_i >= self.n() {
            return Err(Error::InvalidInput(format!(
                "row index {} out of range for {} rows",
                row_i,
                self.n()
            )));
        }
        Ok(())
    }

    /// The linear predictor X_i . beta.
    pub fn predictor(&self, row_i: usize) -> Result<f64> {
        self.check_row(row_i)?;
        Ok(self
            .x
            .row(row_i)
            .iter()
            .zip(self.beta.data())
            .map(|(x, b)| x * b)
            .sum())
    }
}

/// Per-epoch sparsity trace of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub entries: Vec<SparsityEntry>,
}

/// One epoch's record: reconstruction loss and mean activation sparsity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityEntry {
    pub epoch: usize,
    pub hoyer: f64,
    pub loss: f64,
}

/// Hoyer's sparsity measure of a vector with d >= 2 elements:
///
/// ```text
/// H(x) = (sqrt(d) - |x|_1 / |x|_2) / (sqrt(d) - 1)
/// ```
///
/// 0 for a constant non-zero vector, 1 for a one-hot vector, scale
/// invariant in between.
pub fn hoyer(x: &[f64]) -> Result<f64> {
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "hoyer needs at least 2 elements, got {d}"
        )));
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(Error::UndefinedInput(
            "hoyer of the all-zero vector (zero L2 norm)".into(),
        ));
    }
    let sqrt_d = (d as f64).sqrt();
    Ok((sqrt_d - l1 / l2) / (sqrt_d - 1.0))
}

/// Closed-form variance of the perturbed linear predictor of row `row_i`:
/// `((1-p)/p) * sum_j |X_ij|^q beta_j^2`.
pub fn analytic_variance(glm: &GlmSpec, row_i: usize, cfg: &RegConfig) -> Result<f64> {
    cfg.validate()?;
    glm.check_row(row_i)?;
    let factor = (1.0 - cfg.p) / cfg.p;
    Ok(glm
        .x
        .row(row_i)
        .iter()
        .zip(glm.beta.data())
        .map(|(x, b)| factor * x.abs().powf(cfg.q) * b * b)
        .sum())
}

/// Monte-Carlo estimate of the same variance: samples `n_draws` masks (one
/// Bernoulli element per feature, drawn in feature order), perturbs the
/// row, and returns the sample variance of the linear predictor.
///
/// Zero features are left exactly zero; the multiplicative perturbation
/// has no effect on them (for q < 2 the naive power form would produce
/// 0 * infinity).
pub fn empirical_variance(
    glm: &GlmSpec,
    row_i: usize,
    cfg: &RegConfig,
    n_draws: usize,
    rng: &mut Rng,
) -> Result<f64> {
    cfg.validate()?;
    glm.check_row(row_i)?;
    if n_draws < 1000 {
        return Err(Error::InvalidInput(format!(
            "empirical variance needs at least 1000 draws, got {n_draws}"
        )));
    }
    let row = glm.x.row(row_i);
    let beta = glm.beta.data();
    let half_qm2 = (cfg.q - 2.0) / 2.0;
    let inv_p = 1.0 / cfg.p;

    // Welford's online mean/variance over the perturbed predictor.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for draw in 0..n_draws {
        let mut predictor = 0.0;
        for (&x, &b) in row.iter().zip(beta) {
            let r = if rng.bernoulli(cfg.p) { inv_p } else { 0.0 };
            let perturbed = if x == 0.0 {
                0.0
            } else {
                x * (1.0 + x.abs().powf(half_qm2) * (r - 1.0))
            };
            predictor += perturbed * b;
        }
        let delta = predictor - mean;
        mean += delta / (draw + 1) as f64;
        m2 += delta * (predictor - mean);
    }
    Ok(m2 / (n_draws - 1) as f64)
}

/// The quadratic regularization penalty induced by perturbing the design
/// matrix: `sum_i (A''(X_i . beta) / 2) * Var[X~_i . beta]`, which expands
/// to `((1-p)/(2p)) sum_i A''(X_i . beta) sum_j |X_ij|^q beta_j^2`.
pub fn quadratic_penalty(glm: &GlmSpec, cfg: &RegConfig) -> Result<f64> {
    cfg.validate()?;
    let mut total = 0.0;
    for i in 0..glm.n() {
        let z = glm.predictor(i)?;
        total += (glm.second_deriv)(z) / 2.0 * analytic_variance(glm, i, cfg)?;
    }
    Ok(total)
}

/// Mean Hoyer sparsity of one layer's activations over a dataset,
/// evaluated deterministically (eval mode).
///
/// Rows whose activations are all zero have no defined sparsity; they are
/// skipped. If more than half the rows are all-zero the statistic is
/// declared undefined rather than reported from a small remnant.
pub fn network_hoyer(net: &Network, data: &Tensor, layer_index: usize) -> Result<f64> {
    let activations = net.forward_eval_at(data, layer_index)?;
    let n = activations.rows();
    let mut zero_rows = 0usize;
    let mut total = 0.0;
    for i in 0..n {
        let row = activations.row(i);
        if row.iter().all(|&v| v == 0.0) {
            zero_rows += 1;
            continue;
        }
        total += hoyer(row)?;
    }
    if zero_rows * 2 > n {
        return Err(Error::UndefinedInput(format!(
            "{zero_rows} of {n} activation rows are all-zero; sparsity undefined"
        )));
    }
    Ok(total / (n - zero_rows) as f64)
}
