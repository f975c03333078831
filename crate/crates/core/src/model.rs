//! The trainable model: an optional small tanh encoder followed by a
//! cosine-normalized classifier head.
//!
//! The head normalizes both the feature and every class-weight row, so its
//! logits are `s * cos(theta_j)`: they depend only on angular position and are
//! bounded by the scale `s`. Gradients are hand-derived; the finite-difference
//! suite in `tests/` checks every path.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{dot, l2_norm, DenseMatrix, EPS_NORM};

/// Default logit scale; without it the normalized softmax is too flat to train.
pub const DEFAULT_SCALE: f64 = 30.0;

fn uniform_init(rng: &mut ChaCha12Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Feature extractor with zero or one hidden tanh layer.
///
/// Stands in for a backbone network: it maps raw inputs of dimension `d_in`
/// to features of dimension `d_out` that the cosine head consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    /// First (or only) affine layer, `hidden x d_in` or `d_out x d_in`.
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    /// Output layer, present only with a hidden layer: `d_out x hidden`.
    pub w2: Option<DenseMatrix>,
    pub b2: Option<Vec<f64>>,
}

impl Encoder {
    /// Deterministic initialization: uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init(
        input_dim: usize,
        hidden_dim: Option<usize>,
        output_dim: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::config("encoder dimensions must be positive"));
        }
        match hidden_dim {
            None => Ok(Encoder {
                w1: DenseMatrix::from_vec(
                    output_dim,
                    input_dim,
                    uniform_init(rng, output_dim * input_dim, input_dim),
                )?,
                b1: uniform_init(rng, output_dim, input_dim),
                w2: None,
                b2: None,
            }),
            Some(h) => {
                if h == 0 {
                    return Err(Error::config("hidden width must be positive"));
                }
                Ok(Encoder {
                    w1: DenseMatrix::from_vec(h, input_dim, uniform_init(rng, h * input_dim, input_dim))?,
                    b1: uniform_init(rng, h, input_dim),
                    w2: Some(DenseMatrix::from_vec(
                        output_dim,
                        h,
                        uniform_init(rng, output_dim * h, h),
                    )?),
                    b2: Some(uniform_init(rng, output_dim, h)),
                })
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn output_dim(&self) -> usize {
        match &self.w2 {
            Some(w2) => w2.rows(),
            None => self.w1.rows(),
        }
    }

    pub fn hidden_dim(&self) -> Option<usize> {
        self.w2.as_ref().map(|_| self.w1.rows())
    }

    /// Returns `(feature, hidden activations)`; the hidden vector is kept for backprop.
    fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let mut pre = self.w1.matvec(input)?;
        for (z, b) in pre.iter_mut().zip(&self.b1) {
            *z += b;
        }
        match (&self.w2, &self.b2) {
            (Some(w2), Some(b2)) => {
                let hidden: Vec<f64> = pre.iter().map(|z| z.tanh()).collect();
                let mut out = w2.matvec(&hidden)?;
                for (f, b) in out.iter_mut().zip(b2) {
                    *f += b;
                }
                Ok((out, Some(hidden)))
            }
            _ => Ok((pre, None)),
        }
    }
}

/// Gradients for one encoder, shaped like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: Option<DenseMatrix>,
    pub b2: Option<Vec<f64>>,
}

/// Normalized classifier head: `M` class-direction rows plus a fixed scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineClassifier {
    /// `M x d`; rows are re-normalized to unit length after every optimizer step.
    pub weights: DenseMatrix,
    /// Positive logit scale, fixed during training.
    pub scale: f64,
}

impl CosineClassifier {
    pub fn init(classes: usize, dim: usize, scale: f64, rng: &mut ChaCha12Rng) -> Result<Self> {
        if classes < 2 {
            return Err(Error::config("classifier needs at least 2 classes"));
        }
        if !(scale > 0.0) {
            return Err(Error::config("classifier scale must be positive"));
        }
        let mut weights =
            DenseMatrix::from_vec(classes, dim, uniform_init(rng, classes * dim, dim))?;
        normalize_rows(&mut weights)?;
        Ok(CosineClassifier { weights, scale })
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Re-scales every row of `w` to unit L2 norm.
pub fn normalize_rows(w: &mut DenseMatrix) -> Result<()> {
    for r in 0..w.rows() {
        let norm = l2_norm(w.row(r));
        if !(norm > EPS_NORM) {
            return Err(Error::degenerate(format!("weight row {r} has near-zero norm")));
        }
        for v in w.row_mut(r) {
            *v /= norm;
        }
    }
    Ok(())
}

/// Encoder plus cosine head. `encoder: None` feeds raw inputs straight into
/// the head, which makes the logits literally invariant to input rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder: Option<Encoder>,
    pub classifier: CosineClassifier,
}

/// Intermediate state of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    hidden: Option<Vec<f64>>,
    /// Encoder output before normalization.
    pub feature: Vec<f64>,
    pub feature_norm: f64,
    feature_unit: Vec<f64>,
    /// Unit-normalized classifier rows and their original norms.
    weight_units: DenseMatrix,
    weight_norms: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Gradients for every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub encoder: Option<EncoderGrads>,
    pub classifier: DenseMatrix,
}

impl ModelGrads {
    pub fn zeros_like(model: &Model) -> Self {
        ModelGrads {
            encoder: model.encoder.as_ref().map(|e| EncoderGrads {
                w1: DenseMatrix::zeros(e.w1.rows(), e.w1.cols()),
                b1: vec![0.0; e.b1.len()],
                w2: e.w2.as_ref().map(|w| DenseMatrix::zeros(w.rows(), w.cols())),
                b2: e.b2.as_ref().map(|b| vec![0.0; b.len()]),
            }),
            classifier: DenseMatrix::zeros(
                model.classifier.weights.rows(),
                model.classifier.weights.cols(),
            ),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &ModelGrads, c: f64) {
        fn axpy(dst: &mut [f64], src: &[f64], c: f64) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
        match (&mut self.encoder, &other.encoder) {
            (Some(a), Some(b)) => {
                axpy(a.w1.data_mut(), b.w1.data(), c);
                axpy(&mut a.b1, &b.b1, c);
                if let (Some(aw2), Some(bw2)) = (&mut a.w2, &b.w2) {
                    axpy(aw2.data_mut(), bw2.data(), c);
                }
                if let (Some(ab2), Some(bb2)) = (&mut a.b2, &b.b2) {
                    axpy(ab2, bb2, c);
                }
            }
            (None, None) => {}
            _ => panic!("gradient shapes disagree"),
        }
        axpy(self.classifier.data_mut(), other.classifier.data(), c);
    }

    pub fn scale(&mut self, c: f64) {
        self.for_each_mut(|v| *v *= c);
    }

    pub fn is_finite(&self) -> bool {
        let mut finite = true;
        self.for_each(|v| finite &= v.is_finite());
        finite
    }

    fn for_each(&self, mut f: impl FnMut(f64)) {
        if let Some(e) = &self.encoder {
            e.w1.data().iter().for_each(|&v| f(v));
            e.b1.iter().for_each(|&v| f(v));
            if let Some(w2) = &e.w2 {
                w2.data().iter().for_each(|&v| f(v));
            }
            if let Some(b2) = &e.b2 {
                b2.iter().for_each(|&v| f(v));
            }
        }
        self.classifier.data().iter().for_each(|&v| f(v));
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        if let Some(e) = &mut self.encoder {
            e.w1.data_mut().iter_mut().for_each(&mut f);
            e.b1.iter_mut().for_each(&mut f);
            if let Some(w2) = &mut e.w2 {
                w2.data_mut().iter_mut().for_each(&mut f);
            }
            if let Some(b2) = &mut e.b2 {
                b2.iter_mut().for_each(&mut f);
            }
        }
        self.classifier.data_mut().iter_mut().for_each(&mut f);
    }

    /// Flattened view in the same order as [`Model::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_each(|v| out.push(v));
        out
    }
}

impl Model {
    /// Classifier-only model on raw features.
    pub fn cosine_only(classifier: CosineClassifier) -> Self {
        Model {
            encoder: None,
            classifier,
        }
    }

    pub fn init(
        input_dim: usize,
        hidden_dim: Option<usize>,
        embed_dim: usize,
        classes: usize,
        scale: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        let encoder = Encoder::init(input_dim, hidden_dim, embed_dim, rng)?;
        let classifier = CosineClassifier::init(classes, embed_dim, scale, rng)?;
        Ok(Model {
            encoder: Some(encoder),
            classifier,
        })
    }

    pub fn classes(&self) -> usize {
        self.classifier.classes()
    }

    pub fn input_dim(&self) -> usize {
        match &self.encoder {
            Some(e) => e.input_dim(),
            None => self.classifier.dim(),
        }
    }

    /// Full forward pass keeping intermediates for backprop.
    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_dim() {
            return Err(Error::contract(format!(
                "input dim {} does not match model dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        let (feature, hidden) = match &self.encoder {
            Some(e) => e.forward(input)?,
            None => (input.to_vec(), None),
        };
        let feature_norm = l2_norm(&feature);
        if !(feature_norm > EPS_NORM) {
            return Err(Error::degenerate("feature has near-zero norm"));
        }
        let feature_unit: Vec<f64> = feature.iter().map(|v| v / feature_norm).collect();

        let m = self.classifier.classes();
        let d = self.classifier.dim();
        let mut weight_units = DenseMatrix::zeros(m, d);
        let mut weight_norms = vec![0.0; m];
        let mut logits = vec![0.0; m];
        for j in 0..m {
            let row = self.classifier.weights.row(j);
            let norm = l2_norm(row);
            if !(norm > EPS_NORM) {
                return Err(Error::degenerate(format!("classifier row {j} has near-zero norm")));
            }
            weight_norms[j] = norm;
            for (k, &w) in row.iter().enumerate() {
                weight_units.set(j, k, w / norm);
            }
            logits[j] = self.classifier.scale * dot(weight_units.row(j), &feature_unit);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            hidden,
            feature,
            feature_norm,
            feature_unit,
            weight_units,
            weight_norms,
            logits,
        })
    }

    /// Logits `s * cos(theta_j)` for one input.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.logits)
    }

    /// Backpropagates `grad_logits` through the cosine head and encoder.
    ///
    /// Returns parameter gradients plus the gradient with respect to the
    /// pre-normalization feature, which is orthogonal to the feature itself
    /// (the logits depend only on the feature's direction).
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &[f64]) -> Result<(ModelGrads, Vec<f64>)> {
        let m = self.classifier.classes();
        let d = self.classifier.dim();
        if grad_logits.len() != m {
            return Err(Error::contract("upstream gradient length mismatch"));
        }
        let s = self.classifier.scale;
        let u = &trace.feature_unit;

        // d loss / d u = s * sum_j g_j v_j, then project out the radial
        // component and divide by ||f|| to reach the raw feature.
        let mut grad_u = vec![0.0; d];
        let mut grad_w = DenseMatrix::zeros(m, d);
        for j in 0..m {
            let g = grad_logits[j];
            let v = trace.weight_units.row(j);
            for k in 0..d {
                grad_u[k] += s * g * v[k];
            }
            // d logit_j / d w_j = s * (u - (u . v_j) v_j) / ||w_j||
            let uv = dot(u, v);
            let inv_norm = 1.0 / trace.weight_norms[j];
            for k in 0..d {
                grad_w.set(j, k, s * g * (u[k] - uv * v[k]) * inv_norm);
            }
        }
        let radial = dot(&grad_u, u);
        let grad_feature: Vec<f64> = grad_u
            .iter()
            .zip(u)
            .map(|(gu, ui)| (gu - radial * ui) / trace.feature_norm)
            .collect();

        let encoder_grads = match &self.encoder {
            None => None,
            Some(e) => {
                match (&e.w2, &trace.hidden) {
                    (Some(w2), Some(hidden)) => {
                        // Output layer is affine: grad_w2 = grad_f x hidden^T.
                        let mut gw2 = DenseMatrix::zeros(w2.rows(), w2.cols());
                        for i in 0..w2.rows() {
                            for k in 0..w2.cols() {
                                gw2.set(i, k, grad_feature[i] * hidden[k]);
                            }
                        }
                        let gb2 = grad_feature.clone();
                        let grad_hidden = w2.tr_matvec(&grad_feature)?;
                        // tanh' = 1 - tanh^2
                        let grad_pre: Vec<f64> = grad_hidden
                            .iter()
                            .zip(hidden)
                            .map(|(g, h)| g * (1.0 - h * h))
                            .collect();
                        let mut gw1 = DenseMatrix::zeros(e.w1.rows(), e.w1.cols());
                        for i in 0..e.w1.rows() {
                            for k in 0..e.w1.cols() {
                                gw1.set(i, k, grad_pre[i] * trace.input[k]);
                            }
                        }
                        Some(EncoderGrads {
                            w1: gw1,
                            b1: grad_pre,
                            w2: Some(gw2),
                            b2: Some(gb2),
                        })
                    }
                    _ => {
                        let mut gw1 = DenseMatrix::zeros(e.w1.rows(), e.w1.cols());
                        for i in 0..e.w1.rows() {
                            for k in 0..e.w1.cols() {
                                gw1.set(i, k, grad_feature[i] * trace.input[k]);
                            }
                        }
                        Some(EncoderGrads {
                            w1: gw1,
                            b1: grad_feature.clone(),
                            w2: None,
                            b2: None,
                        })
                    }
                }
            }
        };

        Ok((
            ModelGrads {
                encoder: encoder_grads,
                classifier: grad_w,
            },
            grad_feature,
        ))
    }

    /// All parameters flattened in a fixed order (encoder w1, b1, w2, b2,
    /// then classifier rows).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(e) = &self.encoder {
            out.extend_from_slice(e.w1.data());
            out.extend_from_slice(&e.b1);
            if let Some(w2) = &e.w2 {
                out.extend_from_slice(w2.data());
            }
            if let Some(b2) = &e.b2 {
                out.extend_from_slice(b2);
            }
        }
        out.extend_from_slice(self.classifier.weights.data());
        out
    }

    /// Rebuilds a model with this one's shape from a flat parameter vector.
    pub fn from_flat(&self, flat: &[f64]) -> Result<Model> {
        if flat.len() != self.to_flat().len() {
            return Err(Error::contract("flat parameter length mismatch"));
        }
        let mut model = self.clone();
        let mut pos = 0;
        let take = |n: usize, pos: &mut usize| -> Vec<f64> {
            let v = flat[*pos..*pos + n].to_vec();
            *pos += n;
            v
        };
        if let Some(e) = &mut model.encoder {
            let n1 = e.w1.rows() * e.w1.cols();
            let w1 = DenseMatrix::from_vec(e.w1.rows(), e.w1.cols(), take(n1, &mut pos))?;
            e.w1 = w1;
            e.b1 = take(e.b1.len(), &mut pos);
            if let Some(w2) = &mut e.w2 {
                let n2 = w2.rows() * w2.cols();
                *w2 = DenseMatrix::from_vec(w2.rows(), w2.cols(), take(n2, &mut pos))?;
            }
            if let Some(b2) = &mut e.b2 {
                *b2 = take(b2.len(), &mut pos);
            }
        }
        let m = model.classifier.weights.rows();
        let d = model.classifier.weights.cols();
        model.classifier.weights = DenseMatrix::from_vec(m, d, take(m * d, &mut pos))?;
        Ok(model)
    }

    pub fn to_checkpoint(&self, seed: u64, epoch: usize) -> ModelCheckpoint {
        ModelCheckpoint {
            input_dim: self.input_dim(),
            hidden_dim: self.encoder.as_ref().and_then(|e| e.hidden_dim()),
            embed_dim: self.classifier.dim(),
            classes: self.classifier.classes(),
            scale: self.classifier.scale,
            has_encoder: self.encoder.is_some(),
            seed,
            epoch,
            params: self.to_flat(),
        }
    }

    pub fn from_checkpoint(ckpt: &ModelCheckpoint) -> Result<Model> {
        use rand::SeedableRng;
        // The template only fixes shapes; its random values are overwritten.
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let template = if ckpt.has_encoder {
            Model::init(
                ckpt.input_dim,
                ckpt.hidden_dim,
                ckpt.embed_dim,
                ckpt.classes,
                ckpt.scale,
                &mut rng,
            )?
        } else {
            Model::cosine_only(CosineClassifier::init(
                ckpt.classes,
                ckpt.embed_dim,
                ckpt.scale,
                &mut rng,
            )?)
        };
        template.from_flat(&ckpt.params)
    }
}

/// Serializable snapshot of a model: dimensions, seed, epoch, and the flat
/// parameter vector in [`Model::to_flat`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub input_dim: usize,
    pub hidden_dim: Option<usize>,
    pub embed_dim: usize,
    pub classes: usize,
    pub scale: f64,
    pub has_encoder: bool,
    pub seed: u64,
    pub epoch: usize,
    pub params: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn test_classifier(rows: &[Vec<f64>], scale: f64) -> CosineClassifier {
        CosineClassifier {
            weights: DenseMatrix::from_rows(rows).unwrap(),
            scale,
        }
    }

    #[test]
    fn aligned_feature_gives_scale_logit() {
        // f parallel to W_1 with s = 30 forces logit_1 = 30.
        let cls = test_classifier(&[vec![1.0, 0.0], vec![0.0, 1.0]], 30.0);
        let model = Model::cosine_only(cls);
        let logits = model.forward(&[2.5, 0.0]).unwrap();
        assert!((logits[0] - 30.0).abs() < 1e-12);
        assert!(logits[1].abs() < 1e-12);
    }

    #[test]
    fn logits_match_explicit_normalize_then_dot() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let model = Model::init(5, Some(7), 4, 3, 30.0, &mut rng).unwrap();
        let input: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let logits = model.forward(&input).unwrap();

        // Independent recomputation: run the encoder by hand, normalize, dot.
        let enc = model.encoder.as_ref().unwrap();
        let mut z = enc.w1.matvec(&input).unwrap();
        for (v, b) in z.iter_mut().zip(&enc.b1) {
            *v += b;
        }
        let h: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
        let mut f = enc.w2.as_ref().unwrap().matvec(&h).unwrap();
        for (v, b) in f.iter_mut().zip(enc.b2.as_ref().unwrap()) {
            *v += b;
        }
        let fu = crate::tensor::l2_normalize(&f).unwrap();
        for j in 0..3 {
            let wu = crate::tensor::l2_normalize(model.classifier.weights.row(j)).unwrap();
            let want = 30.0 * dot(&wu, &fu);
            assert!((logits[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn logits_invariant_to_feature_rescaling() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let cls = CosineClassifier::init(4, 6, 30.0, &mut rng).unwrap();
        let model = Model::cosine_only(cls);
        for _ in 0..10 {
            let f: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: f64 = rng.random_range(0.1..50.0);
            let scaled: Vec<f64> = f.iter().map(|v| v * c).collect();
            let a = model.forward(&f).unwrap();
            let b = model.forward(&scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn logits_bounded_by_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let model = Model::init(4, Some(5), 3, 4, 30.0, &mut rng).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            for l in model.forward(&x).unwrap() {
                assert!(l.abs() <= 30.0 + 1e-9);
            }
        }
    }

    #[test]
    fn feature_gradient_is_orthogonal_to_feature() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for _ in 0..10 {
            let model = Model::init(5, Some(6), 4, 3, 30.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let trace = model.forward_trace(&x).unwrap();
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, grad_f) = model.backward(&trace, &g).unwrap();
            assert!(dot(&grad_f, &trace.feature).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradients() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let model = Model::init(5, Some(6), 4, 3, 30.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let trace = model.forward_trace(&x).unwrap();
        let (grads, _) = model.backward(&trace, &[0.0, 0.0, 0.0]).unwrap();
        assert!(grads.to_flat().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn orthogonal_feature_gives_zero_logit() {
        let cls = test_classifier(&[vec![1.0, 0.0], vec![0.0, 1.0]], 30.0);
        let model = Model::cosine_only(cls);
        let logits = model.forward(&[0.0, 3.0]).unwrap();
        assert!(logits[0].abs() < 1e-12);
    }

    #[test]
    fn flat_roundtrip_preserves_model() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let model = Model::init(5, Some(6), 4, 3, 30.0, &mut rng).unwrap();
        let rebuilt = model.from_flat(&model.to_flat()).unwrap();
        assert_eq!(model, rebuilt);
    }

    #[test]
    fn checkpoint_roundtrip_through_json() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let model = Model::init(5, Some(6), 4, 3, 30.0, &mut rng).unwrap();
        let ckpt = model.to_checkpoint(99, 7);
        let json = serde_json::to_string(&ckpt).unwrap();
        let back: ModelCheckpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.seed, 99);
        assert_eq!(back.epoch, 7);
        let restored = Model::from_checkpoint(&back).unwrap();
        assert_eq!(model, restored);
    }

    #[test]
    fn near_zero_feature_is_degenerate() {
        let cls = test_classifier(&[vec![1.0, 0.0], vec![0.0, 1.0]], 30.0);
        let model = Model::cosine_only(cls);
        assert!(matches!(
            model.forward(&[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }
}
