//! Loss functions with analytic gradients: plain softmax cross-entropy,
//! the normalized (cosine) loss, its label-smoothed form, and the mean loss
//! over a selected sample set.
//!
//! The smoothed loss is computed literally as a weight on the labeled class
//! plus `(1 - w) / (M - 1)` on every other class; its algebraic identity with
//! cross-entropy against a smoothed target distribution is checked in tests
//! rather than assumed here.

use crate::error::{Error, Result};
use crate::model::{Model, ModelGrads};
use crate::tensor::softmax;

/// Label-smoothing configuration: weight on the labeled class and class count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    /// Mass assigned to the given label, in `(0, 1]`.
    pub label_weight: f64,
    pub classes: usize,
}

impl SmoothingConfig {
    pub fn new(label_weight: f64, classes: usize) -> Result<Self> {
        if !(label_weight > 0.0 && label_weight <= 1.0) {
            return Err(Error::config("label weight must lie in (0, 1]"));
        }
        if classes < 2 {
            return Err(Error::config("smoothing needs at least 2 classes"));
        }
        Ok(SmoothingConfig {
            label_weight,
            classes,
        })
    }

    /// Mass assigned to each non-labeled class.
    pub fn off_weight(&self) -> f64 {
        (1.0 - self.label_weight) / (self.classes - 1) as f64
    }
}

/// Softmax cross-entropy of `logits` against class `target`.
///
/// Returns the loss and its gradient with respect to the logits,
/// `softmax(logits) - onehot(target)`.
pub fn softmax_ce(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::contract(format!(
            "target class {target} out of range for {} logits",
            logits.len()
        )));
    }
    let probs = softmax(logits)?;
    // -log p_y computed in shifted space to avoid log(0) for extreme logits.
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&h| (h - max).exp()).sum::<f64>().ln();
    let loss = log_sum - (logits[target] - max);
    let mut grad = probs.values().to_vec();
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Label-smoothed cross-entropy at the logit level: the weighted sum of
/// per-class softmax cross-entropies with weight `w` on the labeled class and
/// `(1 - w)/(M - 1)` elsewhere.
pub fn smooth_ce(logits: &[f64], target: usize, cfg: &SmoothingConfig) -> Result<(f64, Vec<f64>)> {
    if logits.len() != cfg.classes {
        return Err(Error::contract(format!(
            "expected {} logits, got {}",
            cfg.classes,
            logits.len()
        )));
    }
    let off = cfg.off_weight();
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for class in 0..logits.len() {
        let weight = if class == target { cfg.label_weight } else { off };
        if weight == 0.0 {
            continue;
        }
        let (l, g) = softmax_ce(logits, class)?;
        loss += weight * l;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += weight * gi;
        }
    }
    Ok((loss, grad))
}

/// Cosine-normalized loss: softmax cross-entropy on the model's scaled
/// cosine logits. Returns the loss and gradients for every model parameter.
pub fn normalized_loss(model: &Model, input: &[f64], target: usize) -> Result<(f64, ModelGrads)> {
    let trace = model.forward_trace(input)?;
    let (loss, grad_logits) = softmax_ce(&trace.logits, target)?;
    let (grads, _) = model.backward(&trace, &grad_logits)?;
    Ok((loss, grads))
}

/// Label-smoothed normalized loss with analytic parameter gradients.
pub fn smooth_loss(
    model: &Model,
    input: &[f64],
    target: usize,
    cfg: &SmoothingConfig,
) -> Result<(f64, ModelGrads)> {
    let trace = model.forward_trace(input)?;
    let (loss, grad_logits) = smooth_ce(&trace.logits, target, cfg)?;
    let (grads, _) = model.backward(&trace, &grad_logits)?;
    Ok((loss, grads))
}

/// Mean smoothed loss over a selected set, with gradients averaged the same way.
pub fn final_loss(
    model: &Model,
    samples: &[(&[f64], usize)],
    cfg: &SmoothingConfig,
) -> Result<(f64, ModelGrads)> {
    if samples.is_empty() {
        return Err(Error::contract("selected set is empty"));
    }
    let inv = 1.0 / samples.len() as f64;
    let mut total = 0.0;
    let mut grads = ModelGrads::zeros_like(model);
    for &(input, target) in samples {
        let (loss, g) = smooth_loss(model, input, target, cfg)?;
        total += loss;
        grads.add_scaled(&g, inv);
    }
    Ok((total * inv, grads))
}
