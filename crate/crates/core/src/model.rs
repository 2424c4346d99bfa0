//! The reference classifier: a linear-softmax head with an optional
//! tanh hidden layer, trained by plain SGD with hand-derived gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::Logits;
use crate::rng::{derive_rng, salts};
use crate::scalar::Scalar;

/// Current checkpoint schema.
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
struct HiddenLayer<F: Scalar> {
    /// H×D, row-major.
    w: Vec<F>,
    b: Vec<F>,
    width: usize,
}

/// Classifier mapping a feature vector to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<F: Scalar> {
    input_dim: usize,
    num_classes: usize,
    hidden: Option<HiddenLayer<F>>,
    /// K×(hidden width or D), row-major.
    head_w: Vec<F>,
    head_b: Vec<F>,
}

/// Intermediate activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F: Scalar> {
    features: Vec<F>,
    hidden_out: Option<Vec<F>>,
}

/// Parameter-shaped gradient accumulator for one mini-batch.
#[derive(Debug, Clone)]
pub struct GradientBuffer<F: Scalar> {
    hidden_w: Vec<F>,
    hidden_b: Vec<F>,
    head_w: Vec<F>,
    head_b: Vec<F>,
}

impl<F: Scalar> ClassifierModel<F> {
    /// Initialize with uniform weights in [−0.1, 0.1] drawn from a
    /// generator derived from (seed, model-init role).
    pub fn init(
        input_dim: usize,
        num_classes: usize,
        hidden_width: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid_config("input dimension must be positive"));
        }
        if num_classes < 2 {
            return Err(Error::invalid_config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if hidden_width == Some(0) {
            return Err(Error::invalid_config(
                "hidden width must be positive when enabled",
            ));
        }
        let mut rng = derive_rng(seed, &[salts::MODEL_INIT]);
        let mut draw = |n: usize| -> Vec<F> {
            (0..n)
                .map(|_| F::from_f64(rng.random_range(-0.1..0.1)))
                .collect()
        };
        let (hidden, head_in) = match hidden_width {
            Some(width) => (
                Some(HiddenLayer {
                    w: draw(width * input_dim),
                    b: draw(width),
                    width,
                }),
                width,
            ),
            None => (None, input_dim),
        };
        Ok(Self {
            input_dim,
            num_classes,
            hidden,
            head_w: draw(num_classes * head_in),
            head_b: draw(num_classes),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn hidden_width(&self) -> Option<usize> {
        self.hidden.as_ref().map(|h| h.width)
    }

    /// Logits plus the activations the backward pass needs.
    pub fn forward(&self, features: &[F]) -> Result<(Logits<F>, ForwardCache<F>)> {
        if features.len() != self.input_dim {
            return Err(Error::invalid_input(format!(
                "feature vector has {} entries, model expects {}",
                features.len(),
                self.input_dim
            )));
        }
        let hidden_out: Option<Vec<F>> = self.hidden.as_ref().map(|layer| {
            let mut h = vec![F::zero(); layer.width];
            for (i, out) in h.iter_mut().enumerate() {
                let row = &layer.w[i * self.input_dim..(i + 1) * self.input_dim];
                let mut acc = layer.b[i];
                for (w, x) in row.iter().zip(features) {
                    acc += *w * *x;
                }
                *out = acc.tanh();
            }
            h
        });
        let head_in: &[F] = hidden_out.as_deref().unwrap_or(features);
        let head_in_dim = head_in.len();
        let mut z = vec![F::zero(); self.num_classes];
        for (c, out) in z.iter_mut().enumerate() {
            let row = &self.head_w[c * head_in_dim..(c + 1) * head_in_dim];
            let mut acc = self.head_b[c];
            for (w, x) in row.iter().zip(head_in) {
                acc += *w * *x;
            }
            *out = acc;
        }
        Ok((
            Logits::new(z)?,
            ForwardCache {
                features: features.to_vec(),
                hidden_out,
            },
        ))
    }

    pub fn zero_gradient(&self) -> GradientBuffer<F> {
        GradientBuffer {
            hidden_w: vec![F::zero(); self.hidden.as_ref().map_or(0, |h| h.w.len())],
            hidden_b: vec![F::zero(); self.hidden.as_ref().map_or(0, |h| h.b.len())],
            head_w: vec![F::zero(); self.head_w.len()],
            head_b: vec![F::zero(); self.head_b.len()],
        }
    }

    /// Backpropagate one sample's logit gradient `dz` (already scaled by
    /// its batch weight) into the accumulator.
    pub fn accumulate_gradient(
        &self,
        cache: &ForwardCache<F>,
        dz: &[F],
        grad: &mut GradientBuffer<F>,
    ) -> Result<()> {
        if dz.len() != self.num_classes {
            return Err(Error::invalid_input(format!(
                "gradient has {} entries, model has {} classes",
                dz.len(),
                self.num_classes
            )));
        }
        match (&self.hidden, &cache.hidden_out) {
            (Some(layer), Some(h)) => {
                for (c, &g) in dz.iter().enumerate() {
                    let row = &mut grad.head_w[c * layer.width..(c + 1) * layer.width];
                    for (slot, &hi) in row.iter_mut().zip(h) {
                        *slot += g * hi;
                    }
                    grad.head_b[c] += g;
                }
                // dL/dh, then through tanh: da = dh · (1 − h²).
                for i in 0..layer.width {
                    let mut dh = F::zero();
                    for (c, &g) in dz.iter().enumerate() {
                        dh += g * self.head_w[c * layer.width + i];
                    }
                    let da = dh * (F::one() - h[i] * h[i]);
                    let row = &mut grad.hidden_w[i * self.input_dim..(i + 1) * self.input_dim];
                    for (slot, &x) in row.iter_mut().zip(&cache.features) {
                        *slot += da * x;
                    }
                    grad.hidden_b[i] += da;
                }
            }
            (None, None) => {
                for (c, &g) in dz.iter().enumerate() {
                    let row = &mut grad.head_w[c * self.input_dim..(c + 1) * self.input_dim];
                    for (slot, &x) in row.iter_mut().zip(&cache.features) {
                        *slot += g * x;
                    }
                    grad.head_b[c] += g;
                }
            }
            _ => {
                return Err(Error::invalid_input(
                    "forward cache does not match model architecture",
                ))
            }
        }
        Ok(())
    }

    /// One SGD step: θ ← θ − lr·grad.
    pub fn apply_step(&mut self, grad: &GradientBuffer<F>, learning_rate: F) {
        if let Some(layer) = &mut self.hidden {
            for (w, g) in layer.w.iter_mut().zip(&grad.hidden_w) {
                *w -= learning_rate * *g;
            }
            for (b, g) in layer.b.iter_mut().zip(&grad.hidden_b) {
                *b -= learning_rate * *g;
            }
        }
        for (w, g) in self.head_w.iter_mut().zip(&grad.head_w) {
            *w -= learning_rate * *g;
        }
        for (b, g) in self.head_b.iter_mut().zip(&grad.head_b) {
            *b -= learning_rate * *g;
        }
    }

    /// Class with the highest logit.
    pub fn predict(&self, features: &[F]) -> Result<usize> {
        let (z, _) = self.forward(features)?;
        let mut best = 0;
        for (i, &v) in z.values().iter().enumerate() {
            if v > z.values()[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn all_parameters_finite(&self) -> bool {
        let head = self.head_w.iter().chain(&self.head_b);
        let hidden = self
            .hidden
            .iter()
            .flat_map(|layer| layer.w.iter().chain(&layer.b));
        head.chain(hidden).all(|v| v.is_finite())
    }

    /// Flattened parameters in checkpoint order:
    /// [hidden w, hidden b,] head w, head b.
    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint<F> {
        let mut params = Vec::new();
        if let Some(layer) = &self.hidden {
            params.extend_from_slice(&layer.w);
            params.extend_from_slice(&layer.b);
        }
        params.extend_from_slice(&self.head_w);
        params.extend_from_slice(&self.head_b);
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            input_dim: self.input_dim,
            num_classes: self.num_classes,
            hidden_width: self.hidden_width(),
            params,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint<F>) -> Result<Self> {
        if checkpoint.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::data_integrity(format!(
                "checkpoint schema {} unsupported (expected {})",
                checkpoint.schema_version, CHECKPOINT_SCHEMA_VERSION
            )));
        }
        let d = checkpoint.input_dim;
        let k = checkpoint.num_classes;
        let head_in = checkpoint.hidden_width.unwrap_or(d);
        let expected = checkpoint.hidden_width.map_or(0, |h| h * d + h) + k * head_in + k;
        if checkpoint.params.len() != expected {
            return Err(Error::data_integrity(format!(
                "checkpoint has {} parameters, expected {expected}",
                checkpoint.params.len()
            )));
        }
        if checkpoint.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::data_integrity(
                "checkpoint contains non-finite parameters",
            ));
        }
        let mut rest = checkpoint.params.as_slice();
        let hidden = checkpoint.hidden_width.map(|width| {
            let (w, r) = rest.split_at(width * d);
            let (b, r) = r.split_at(width);
            rest = r;
            HiddenLayer {
                w: w.to_vec(),
                b: b.to_vec(),
                width,
            }
        });
        let (head_w, rest) = rest.split_at(k * head_in);
        Ok(Self {
            input_dim: d,
            num_classes: k,
            hidden,
            head_w: head_w.to_vec(),
            head_b: rest.to_vec(),
        })
    }
}

/// Serialized model: schema version, dimensions, flattened parameters, and
/// the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint<F: Scalar> {
    pub schema_version: u32,
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden_width: Option<usize>,
    pub params: Vec<F>,
    pub config_hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_computes_linear_head() {
        let mut model = ClassifierModel::<f64>::init(2, 2, None, 0).unwrap();
        model.head_w = vec![1.0, 0.0, 0.0, 1.0];
        model.head_b = vec![0.5, -0.5];
        let (z, _) = model.forward(&[2.0, 3.0]).unwrap();
        assert_eq!(z.values(), [2.5, 2.5]);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let model = ClassifierModel::<f64>::init(4, 3, None, 0).unwrap();
        assert!(model.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = ClassifierModel::<f64>::init(6, 4, Some(8), 42).unwrap();
        let b = ClassifierModel::<f64>::init(6, 4, Some(8), 42).unwrap();
        assert_eq!(a, b);
        let c = ClassifierModel::<f64>::init(6, 4, Some(8), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gradient_step_moves_parameters_opposite_gradient() {
        let mut model = ClassifierModel::<f64>::init(2, 2, None, 1).unwrap();
        let before = model.head_w.clone();
        let (_, cache) = model.forward(&[1.0, 0.0]).unwrap();
        let mut grad = model.zero_gradient();
        model
            .accumulate_gradient(&cache, &[1.0, -1.0], &mut grad)
            .unwrap();
        model.apply_step(&grad, 0.1);
        // dz[0] = 1 against x = [1, 0]: head_w[0] decreases by 0.1.
        assert!((model.head_w[0] - (before[0] - 0.1)).abs() < 1e-15);
        assert!((model.head_w[2] - (before[2] + 0.1)).abs() < 1e-15);
        assert_eq!(model.head_w[1], before[1] - 0.0);
    }

    #[test]
    fn hidden_model_gradient_matches_finite_differences() {
        // Full-network check through the tanh layer against central
        // differences of the cross-entropy loss.
        use crate::label::{OrdinalLabel, ReliabilityClass, ReliabilityRecord, Stage, Target};
        use crate::loss::{per_sample_loss, softmax};

        let model = ClassifierModel::<f64>::init(3, 3, Some(5), 7).unwrap();
        let x = [0.3, -1.2, 0.8];
        let record = ReliabilityRecord {
            sample_id: "g".to_string(),
            gt: OrdinalLabel::new(1, 3).unwrap(),
            pred: OrdinalLabel::new(1, 3).unwrap(),
            discrepancy: 0,
            reliability: ReliabilityClass::Confident,
            stage: Stage::Stage1,
            weight: 1.0,
            target: Target::Hard(OrdinalLabel::new(1, 3).unwrap()),
        };

        let loss_of = |m: &ClassifierModel<f64>| -> f64 {
            let (z, _) = m.forward(&x).unwrap();
            per_sample_loss(&record, &softmax(&z).unwrap()).unwrap()
        };

        let (z, cache) = model.forward(&x).unwrap();
        let p = softmax(&z).unwrap();
        let t = record.target.dense(3);
        let dz: Vec<f64> = p.values().iter().zip(&t).map(|(pi, ti)| pi - ti).collect();
        let mut grad = model.zero_gradient();
        model.accumulate_gradient(&cache, &dz, &mut grad).unwrap();

        let eps = 1e-6;
        let check = |get: &dyn Fn(&ClassifierModel<f64>) -> f64,
                     set: &dyn Fn(&mut ClassifierModel<f64>, f64),
                     analytic: f64| {
            let mut plus = model.clone();
            set(&mut plus, get(&model) + eps);
            let mut minus = model.clone();
            set(&mut minus, get(&model) - eps);
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
            assert!(
                (numeric - analytic).abs() / numeric.abs().max(1.0) < 1e-4,
                "numeric {numeric} vs analytic {analytic}"
            );
        };

        for idx in [0usize, 3, 7, 11] {
            check(
                &|m| m.hidden.as_ref().unwrap().w[idx],
                &move |m, v| m.hidden.as_mut().unwrap().w[idx] = v,
                grad.hidden_w[idx],
            );
        }
        for idx in [0usize, 4] {
            check(
                &|m| m.hidden.as_ref().unwrap().b[idx],
                &move |m, v| m.hidden.as_mut().unwrap().b[idx] = v,
                grad.hidden_b[idx],
            );
        }
        for idx in [0usize, 6, 14] {
            check(
                &|m| m.head_w[idx],
                &move |m, v| m.head_w[idx] = v,
                grad.head_w[idx],
            );
        }
        for idx in [0usize, 2] {
            check(
                &|m| m.head_b[idx],
                &move |m, v| m.head_b[idx] = v,
                grad.head_b[idx],
            );
        }
    }

    #[test]
    fn checkpoint_round_trips_linear_and_hidden() {
        for hidden in [None, Some(6)] {
            let model = ClassifierModel::<f64>::init(4, 3, hidden, 9).unwrap();
            let checkpoint = model.to_checkpoint("abc123");
            assert_eq!(checkpoint.config_hash, "abc123");
            let json = serde_json::to_string(&checkpoint).unwrap();
            let parsed: Checkpoint<f64> = serde_json::from_str(&json).unwrap();
            let restored = ClassifierModel::from_checkpoint(&parsed).unwrap();
            assert_eq!(restored, model);
        }
    }

    #[test]
    fn checkpoint_rejects_corrupt_parameter_counts() {
        let model = ClassifierModel::<f64>::init(4, 3, None, 9).unwrap();
        let mut checkpoint = model.to_checkpoint("h");
        checkpoint.params.pop();
        assert!(ClassifierModel::from_checkpoint(&checkpoint).is_err());

        let mut checkpoint = model.to_checkpoint("h");
        checkpoint.schema_version = 99;
        assert!(ClassifierModel::from_checkpoint(&checkpoint).is_err());
    }

    #[test]
    fn prediction_picks_argmax() {
        let mut model = ClassifierModel::<f64>::init(2, 3, None, 0).unwrap();
        model.head_w = vec![1.0, 0.0, 0.0, 1.0, -1.0, -1.0];
        model.head_b = vec![0.0, 0.0, 0.0];
        assert_eq!(model.predict(&[3.0, 0.0]).unwrap(), 0);
        assert_eq!(model.predict(&[0.0, 3.0]).unwrap(), 1);
    }
}
