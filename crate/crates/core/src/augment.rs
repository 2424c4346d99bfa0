//! Reliability-weighted segmentation-and-recombination augmentation:
//! same-class signals are cut into n segments, segments are drawn with
//! weight-proportional probabilities and concatenated, and the new sample
//! carries the mean weight of its sources.

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledSample, Signal};
use crate::error::{Error, Result};
use crate::label::{OrdinalLabel, ReliabilityClass, ReliabilityRecord, Stage, Target};
use crate::rng::{derive_rng, salts};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Segments per signal. Signals whose length is not divisible by this
    /// are truncated to the largest multiple before cutting.
    pub n_segments: usize,
    /// Augmented samples per class; `null` matches each class's original
    /// size, 0 disables augmentation.
    pub per_class_count: Option<usize>,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            n_segments: 4,
            per_class_count: None,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 {
            return Err(Error::invalid_config("n_segments must be at least 1"));
        }
        Ok(())
    }
}

/// Weight-proportional sampling distribution over one class's samples:
/// p_i = w_i / Σ w_j. The class index is used only for error reporting.
pub fn sampling_probabilities<F: Scalar>(class: usize, weights: &[F]) -> Result<Vec<F>> {
    if weights.is_empty() {
        return Err(Error::EmptyClass { class });
    }
    let mut total = F::zero();
    for &w in weights {
        if !(w > F::zero()) || !w.is_finite() {
            return Err(Error::invalid_input(format!(
                "non-positive weight {w} in class {class}"
            )));
        }
        total += w;
    }
    let probs: Vec<F> = weights.iter().map(|&w| w / total).collect();
    let sum: F = probs.iter().cloned().sum();
    debug_assert!((sum - F::one()).abs().to_f64_lossy() < 1e-9);
    Ok(probs)
}

/// Cut a signal into `n` equal-length sub-signals, truncating to
/// L' = n·⌊L/n⌋ frames first. Concatenating the result reproduces the
/// truncated prefix exactly.
pub fn segment_signal<F: Scalar>(x: &Signal<F>, n: usize) -> Result<Vec<Signal<F>>> {
    let len = x.num_frames();
    if n == 0 {
        return Err(Error::invalid_config("segment count must be at least 1"));
    }
    if n > len {
        return Err(Error::invalid_config(format!(
            "cannot cut {len} frames into {n} segments"
        )));
    }
    let seg_len = len / n;
    (0..n)
        .map(|j| {
            let channels: IndexMap<String, Vec<F>> = x
                .channels()
                .iter()
                .map(|(name, values)| {
                    (
                        name.clone(),
                        values[j * seg_len..(j + 1) * seg_len].to_vec(),
                    )
                })
                .collect();
            Signal::new(channels)
        })
        .collect()
}

/// Draw one source index per segment slot (shared across channels, keeping
/// them coherent within a slot), concatenate the drawn segments, and average
/// the drawn weights. All sources must share one frame count.
pub fn recombine<F: Scalar>(
    class: usize,
    class_samples: &[(&Signal<F>, F)],
    probs: &[F],
    n: usize,
    rng: &mut impl Rng,
) -> Result<(Signal<F>, F)> {
    if class_samples.is_empty() {
        return Err(Error::EmptyClass { class });
    }
    if probs.len() != class_samples.len() {
        return Err(Error::invalid_input(format!(
            "{} probabilities for {} samples in class {class}",
            probs.len(),
            class_samples.len()
        )));
    }
    let len = class_samples[0].0.num_frames();
    for (signal, _) in class_samples {
        if signal.num_frames() != len {
            return Err(Error::invalid_input(format!(
                "class {class} mixes signal lengths {} and {len}",
                signal.num_frames()
            )));
        }
    }
    if n == 0 {
        return Err(Error::invalid_config("segment count must be at least 1"));
    }
    if n > len {
        return Err(Error::invalid_config(format!(
            "cannot cut {len} frames into {n} segments"
        )));
    }

    let seg_len = len / n;
    let sources: Vec<usize> = (0..n).map(|_| draw_index(probs, rng)).collect();

    let names: Vec<&String> = class_samples[0].0.channels().keys().collect();
    let mut channels = IndexMap::with_capacity(names.len());
    for name in names {
        let mut values = Vec::with_capacity(seg_len * n);
        for (slot, &src) in sources.iter().enumerate() {
            let channel = class_samples[src].0.channel(name).ok_or_else(|| {
                Error::data_integrity(format!("class {class} mixes channel layouts"))
            })?;
            values.extend_from_slice(&channel[slot * seg_len..(slot + 1) * seg_len]);
        }
        channels.insert(name.clone(), values);
    }

    let weight =
        sources.iter().map(|&src| class_samples[src].1).sum::<F>() / F::from_usize_lossy(n);
    Ok((Signal::new(channels)?, weight))
}

/// Inverse-CDF draw over a normalized distribution. The uniform variate is
/// drawn as `f64` so index selection does not depend on the scalar type.
fn draw_index<F: Scalar>(probs: &[F], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// The extended dataset plus bookkeeping for the appended samples.
#[derive(Debug, Clone)]
pub struct AugmentOutcome<F: Scalar> {
    /// Original samples untouched, augmented samples appended after them.
    pub dataset: Dataset<F>,
    /// One record per augmented sample: hard class target, weight w_aug.
    pub records: Vec<ReliabilityRecord<F>>,
    /// Classes that had no source samples and were skipped with a warning.
    pub skipped_classes: Vec<usize>,
}

/// Append `per_class_count` recombined samples per class, drawing sources
/// with weight-proportional probabilities from that class's pool. Every
/// original sample must have a reliability record supplying its weight.
/// Each augmented sample derives its generator from (seed, class, ordinal),
/// so output does not depend on iteration order.
pub fn augment_dataset<F: Scalar>(
    dataset: &Dataset<F>,
    records: &[ReliabilityRecord<F>],
    cfg: &AugmentConfig,
) -> Result<AugmentOutcome<F>> {
    cfg.validate()?;
    let k = dataset.num_classes();

    let mut weight_by_id = std::collections::HashMap::new();
    for record in records {
        weight_by_id.insert(record.sample_id.as_str(), record.weight);
    }

    let mut pools: Vec<Vec<(&Signal<F>, F)>> = vec![Vec::new(); k];
    for sample in dataset.iter() {
        let weight = weight_by_id.get(sample.id.as_str()).ok_or_else(|| {
            Error::data_integrity(format!("no reliability record for sample {}", sample.id))
        })?;
        pools[sample.label.value()].push((&sample.signal, *weight));
    }

    let mut augmented = Vec::new();
    let mut aug_records = Vec::new();
    let mut skipped_classes = Vec::new();
    for (class, pool) in pools.iter().enumerate() {
        if pool.is_empty() {
            skipped_classes.push(class);
            continue;
        }
        let count = cfg.per_class_count.unwrap_or(pool.len());
        if count == 0 {
            continue;
        }
        let weights: Vec<F> = pool.iter().map(|(_, w)| *w).collect();
        let probs = sampling_probabilities(class, &weights)?;
        let label = OrdinalLabel::new(class, k)?;
        for ordinal in 0..count {
            let mut rng = derive_rng(cfg.seed, &[salts::AUGMENT, class as u64, ordinal as u64]);
            let (signal, weight) = recombine(class, pool, &probs, cfg.n_segments, &mut rng)?;
            let id = format!("aug-{class}-{ordinal:05}");
            augmented.push(LabeledSample {
                id: id.clone(),
                label,
                signal,
                latent: None,
            });
            aug_records.push(ReliabilityRecord {
                sample_id: id,
                gt: label,
                pred: label,
                discrepancy: 0,
                reliability: ReliabilityClass::Confident,
                stage: Stage::Stage1,
                weight,
                target: Target::Hard(label),
            });
        }
    }

    Ok(AugmentOutcome {
        dataset: dataset.clone().extend(augmented)?,
        records: aug_records,
        skipped_classes,
    })
}
