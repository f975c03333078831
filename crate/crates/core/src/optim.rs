//! SGD with momentum and the warm-up plus cosine-annealing learning-rate
//! schedule. After every step the classifier rows are re-normalized to unit
//! length, keeping the class centers on the hypersphere.

use crate::error::{Error, Result};
use crate::model::{normalize_rows, Model, ModelGrads};

/// Momentum update on one flat parameter slice:
/// `v <- mu * v + g`, `p <- p - lr * v`.
pub fn sgd_update(params: &mut [f64], velocity: &mut [f64], grads: &[f64], momentum: f64, lr: f64) {
    debug_assert_eq!(params.len(), velocity.len());
    debug_assert_eq!(params.len(), grads.len());
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
}

/// Velocity buffers plus the optimizer's hyperparameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    velocity: ModelGrads,
    pub momentum: f64,
    pub base_lr: f64,
    pub warmup_epochs: usize,
    pub total_epochs: usize,
}

impl OptimizerState {
    pub fn new(
        model: &Model,
        momentum: f64,
        base_lr: f64,
        warmup_epochs: usize,
        total_epochs: usize,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        if !(base_lr > 0.0) {
            return Err(Error::config("base learning rate must be positive"));
        }
        if total_epochs == 0 {
            return Err(Error::config("total epochs must be at least 1"));
        }
        Ok(OptimizerState {
            velocity: ModelGrads::zeros_like(model),
            momentum,
            base_lr,
            warmup_epochs,
            total_epochs,
        })
    }

    /// Learning rate for a 1-based epoch: a linear ramp from
    /// `base_lr / warmup` up to `base_lr` over the warm-up epochs, then
    /// cosine annealing down to zero at the final epoch.
    pub fn lr_at_epoch(&self, epoch: usize) -> Result<f64> {
        if epoch == 0 || epoch > self.total_epochs {
            return Err(Error::contract(format!(
                "epoch {} outside schedule 1..={}",
                epoch, self.total_epochs
            )));
        }
        if epoch <= self.warmup_epochs {
            return Ok(self.base_lr * epoch as f64 / self.warmup_epochs as f64);
        }
        let progress =
            (epoch - self.warmup_epochs) as f64 / (self.total_epochs - self.warmup_epochs) as f64;
        Ok(self.base_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
    }

    /// One momentum step over every parameter tensor, then row re-normalization
    /// of the classifier.
    pub fn step(&mut self, model: &mut Model, grads: &ModelGrads, lr: f64) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Diverged {
                reason: "non-finite gradients".into(),
                checkpoint: None,
            });
        }
        match (&mut model.encoder, &mut self.velocity.encoder, &grads.encoder) {
            (Some(e), Some(v), Some(g)) => {
                sgd_update(e.w1.data_mut(), v.w1.data_mut(), g.w1.data(), self.momentum, lr);
                sgd_update(&mut e.b1, &mut v.b1, &g.b1, self.momentum, lr);
                if let (Some(ew2), Some(vw2), Some(gw2)) = (&mut e.w2, &mut v.w2, &g.w2) {
                    sgd_update(ew2.data_mut(), vw2.data_mut(), gw2.data(), self.momentum, lr);
                }
                if let (Some(eb2), Some(vb2), Some(gb2)) = (&mut e.b2, &mut v.b2, &g.b2) {
                    sgd_update(eb2, vb2, gb2, self.momentum, lr);
                }
            }
            (None, None, None) => {}
            _ => return Err(Error::contract("optimizer/model/gradient shapes disagree")),
        }
        sgd_update(
            model.classifier.weights.data_mut(),
            self.velocity.classifier.data_mut(),
            grads.classifier.data(),
            self.momentum,
            lr,
        );
        normalize_rows(&mut model.classifier.weights)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CosineClassifier;
    use crate::tensor::l2_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_momentum_reduces_to_plain_sgd() {
        let mut p = [1.0, -2.0];
        let mut v = [0.0, 0.0];
        sgd_update(&mut p, &mut v, &[0.5, -0.25], 0.0, 0.1);
        assert!((p[0] - 0.95).abs() < 1e-15);
        assert!((p[1] + 1.975).abs() < 1e-15);
    }

    #[test]
    fn two_momentum_steps_forced_arithmetic() {
        // mu = 0.9, g = 1, lr = 1, p0 = 0: p after two steps is -1 - 1.9 = -2.9.
        let mut p = [0.0];
        let mut v = [0.0];
        sgd_update(&mut p, &mut v, &[1.0], 0.9, 1.0);
        assert!((p[0] + 1.0).abs() < 1e-15);
        sgd_update(&mut p, &mut v, &[1.0], 0.9, 1.0);
        assert!((p[0] + 2.9).abs() < 1e-15);
    }

    #[test]
    fn momentum_converges_on_convex_quadratic() {
        // f(p) = 0.5 * ||p - a||^2 has its optimum at a.
        let target = [1.0, -2.0, 3.0];
        let mut p = [0.0, 0.0, 0.0];
        let mut v = [0.0, 0.0, 0.0];
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().zip(&target).map(|(pi, ai)| pi - ai).collect();
            sgd_update(&mut p, &mut v, &g, 0.9, 0.1);
        }
        for (pi, ai) in p.iter().zip(&target) {
            assert!((pi - ai).abs() < 1e-6);
        }
    }

    fn toy_state(warmup: usize, total: usize) -> OptimizerState {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let model = crate::model::Model::cosine_only(
            CosineClassifier::init(2, 2, 30.0, &mut rng).unwrap(),
        );
        OptimizerState::new(&model, 0.9, 0.01, warmup, total).unwrap()
    }

    #[test]
    fn schedule_endpoints() {
        let state = toy_state(5, 80);
        assert!((state.lr_at_epoch(5).unwrap() - 0.01).abs() < 1e-15);
        assert!(state.lr_at_epoch(80).unwrap().abs() < 1e-12);
    }

    #[test]
    fn warmup_forced_arithmetic() {
        let state = toy_state(5, 80);
        assert!((state.lr_at_epoch(3).unwrap() - 0.006).abs() < 1e-15);
    }

    #[test]
    fn schedule_rejects_out_of_range_epochs() {
        let state = toy_state(5, 80);
        assert!(state.lr_at_epoch(0).is_err());
        assert!(state.lr_at_epoch(81).is_err());
    }

    #[test]
    fn classifier_rows_stay_unit_norm_after_steps() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let mut model = crate::model::Model::init(4, Some(5), 3, 4, 30.0, &mut rng).unwrap();
        let mut state = OptimizerState::new(&model, 0.9, 0.05, 1, 100).unwrap();
        for step in 0..50 {
            let mut grads = ModelGrads::zeros_like(&model);
            for v in grads.classifier.data_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            state.step(&mut model, &grads, 0.05).unwrap();
            for r in 0..model.classifier.weights.rows() {
                let norm = l2_norm(model.classifier.weights.row(r));
                assert!((norm - 1.0).abs() < 1e-9, "step {step}: row norm {norm}");
            }
        }
    }

    #[test]
    fn non_finite_gradients_are_divergence() {
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let mut model = crate::model::Model::cosine_only(
            CosineClassifier::init(2, 2, 30.0, &mut rng).unwrap(),
        );
        let mut state = OptimizerState::new(&model, 0.9, 0.01, 1, 10).unwrap();
        let mut grads = ModelGrads::zeros_like(&model);
        grads.classifier.set(0, 0, f64::NAN);
        assert!(matches!(
            state.step(&mut model, &grads, 0.01),
            Err(crate::error::Error::Diverged { .. })
        ));
    }
}
