//! Curriculum training over reliability records: a baseline regime on hard
//! labels, a one-stage regime with soft targets and weights active from the
//! first epoch, and a two-stage regime that trains on confident samples
//! first and then folds in the ambiguous ones.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_dataset, AugmentConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::{extract_features, feature_dim, FeatureVector};
use crate::label::{
    validate_alpha, ReliabilityClass, ReliabilityRecord, Stage, Target, WeightConfig,
};
use crate::loss::{per_sample_loss, softmax};
use crate::model::ClassifierModel;
use crate::rng::{derive_rng, salts};
use crate::scalar::Scalar;

/// Training regime selecting how annotations shape the curriculum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Hard ground-truth targets, unit weights, no augmentation; ignores
    /// annotations entirely.
    Baseline,
    /// Soft targets, reliability weights, and augmentation from epoch 0.
    OneStage,
    /// Confident samples first, then the full set with soft targets and
    /// augmentation.
    TwoStage,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::OneStage => "one_stage",
            Regime::TwoStage => "two_stage",
        }
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig<F: Scalar> {
    pub regime: Regime,
    pub epochs_stage1: usize,
    pub epochs_stage2: usize,
    pub learning_rate: F,
    pub batch_size: usize,
    pub alpha: F,
    pub weights: WeightConfig<F>,
    pub augment: AugmentConfig,
    pub hidden_width: Option<usize>,
    pub seed: u64,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            regime: Regime::TwoStage,
            epochs_stage1: 60,
            epochs_stage2: 60,
            learning_rate: F::from_f64(0.05),
            batch_size: 32,
            alpha: F::from_f64(0.7),
            weights: WeightConfig::default(),
            augment: AugmentConfig::default(),
            hidden_width: None,
            seed: 0,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_stage1 + self.epochs_stage2 == 0 {
            return Err(Error::invalid_config(
                "total epoch budget must be at least 1",
            ));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < F::zero() {
            return Err(Error::invalid_config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid_config("batch size must be at least 1"));
        }
        if self.hidden_width == Some(0) {
            return Err(Error::invalid_config(
                "hidden width must be positive when enabled",
            ));
        }
        validate_alpha(self.alpha)?;
        self.weights.validate()?;
        self.augment.validate()?;
        Ok(())
    }

    /// Epochs a single-stage regime runs for: the whole budget.
    pub fn total_epochs(&self) -> usize {
        self.epochs_stage1 + self.epochs_stage2
    }
}

/// Loss history of one contiguous training phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: serde::de::Deserialize<'de>"))]
pub struct StageHistory<F: Scalar> {
    pub stage: Stage,
    /// Global epoch index of this phase's first epoch; the shuffle stream
    /// is keyed on global epochs so phases compose deterministically.
    pub start_epoch: usize,
    /// Weighted mean loss per epoch, one entry per epoch run.
    pub epoch_losses: Vec<F>,
    /// Per-epoch, per-batch losses. Diagnostic only; not persisted.
    #[serde(skip)]
    pub batch_losses: Vec<Vec<F>>,
}

/// Summary of a full curriculum run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport<F: Scalar> {
    pub regime: Regime,
    /// Original training samples seen (before augmentation).
    pub n_samples: usize,
    /// Augmented samples added, if any phase used augmentation.
    pub n_augmented: usize,
    pub stages: Vec<StageHistory<F>>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// One mini-batch SGD phase over a fixed subset. Batches are reshuffled
/// each epoch from a generator keyed on (seed, global epoch), so separate
/// phases sharing a seed draw from one continuous epoch stream.
pub fn train_stage<F: Scalar>(
    model: &mut ClassifierModel<F>,
    subset: &[(FeatureVector<F>, ReliabilityRecord<F>)],
    cfg: &TrainConfig<F>,
    stage: Stage,
    start_epoch: usize,
    epochs: usize,
) -> Result<StageHistory<F>> {
    if subset.is_empty() {
        return Err(Error::invalid_input("training subset is empty"));
    }
    let k = model.num_classes();
    for (features, record) in subset {
        if features.len() != model.input_dim() {
            return Err(Error::invalid_input(format!(
                "sample {} has {} features, model expects {}",
                record.sample_id,
                features.len(),
                model.input_dim()
            )));
        }
        if record.gt.num_classes() != k {
            return Err(Error::invalid_input(format!(
                "sample {} is labeled on a {}-class scale, model has {k} classes",
                record.sample_id,
                record.gt.num_classes()
            )));
        }
        record.check_consistent()?;
    }

    let n = subset.len();
    let n_scalar = F::from_usize_lossy(n);
    let diverged = |epoch: usize| Error::TrainingDiverged {
        epoch,
        learning_rate: cfg.learning_rate.to_f64_lossy(),
    };

    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut batch_losses = Vec::with_capacity(epochs);
    for local_epoch in 0..epochs {
        let global_epoch = start_epoch + local_epoch;
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = derive_rng(cfg.seed, &[salts::SHUFFLE, global_epoch as u64]);
        order.shuffle(&mut shuffle_rng);

        let mut weighted_sum = F::zero();
        let mut this_epoch = Vec::new();
        for batch in order.chunks(cfg.batch_size) {
            let batch_n = F::from_usize_lossy(batch.len());
            let mut grad = model.zero_gradient();
            let mut batch_sum = F::zero();
            for &j in batch {
                let (features, record) = &subset[j];
                // After the upfront validation, failures here can only be
                // numeric (overflowing logits), i.e. divergence.
                let (z, cache) = model
                    .forward(features)
                    .map_err(|_| diverged(global_epoch))?;
                let p = softmax(&z).map_err(|_| diverged(global_epoch))?;
                let loss = per_sample_loss(record, &p).map_err(|_| diverged(global_epoch))?;
                let target = record.target.dense(k);
                let scale = record.weight / batch_n;
                let dz: Vec<F> = p
                    .values()
                    .iter()
                    .zip(&target)
                    .map(|(&pi, &ti)| (pi - ti) * scale)
                    .collect();
                model.accumulate_gradient(&cache, &dz, &mut grad)?;
                batch_sum += record.weight * loss;
            }
            let batch_loss = batch_sum / batch_n;
            if !batch_loss.is_finite() {
                return Err(diverged(global_epoch));
            }
            model.apply_step(&grad, cfg.learning_rate);
            if !model.all_parameters_finite() {
                return Err(diverged(global_epoch));
            }
            weighted_sum += batch_sum;
            this_epoch.push(batch_loss);
        }
        epoch_losses.push(weighted_sum / n_scalar);
        batch_losses.push(this_epoch);
    }
    Ok(StageHistory {
        stage,
        start_epoch,
        epoch_losses,
        batch_losses,
    })
}

/// Train a classifier on `dataset` under the configured regime.
///
/// Two-stage: confident records for `epochs_stage1` epochs with hard
/// targets, then the union of all records plus weight-guided augmentation
/// for `epochs_stage2` epochs. One-stage: everything (including
/// augmentation) active for the whole budget. Baseline: hard observed
/// labels, unit weights, no augmentation, annotations ignored.
///
/// An empty confident pool under the two-stage regime degrades to
/// one-stage behavior and records a warning in the report.
pub fn train_curriculum<F: Scalar>(
    dataset: &Dataset<F>,
    records: &[ReliabilityRecord<F>],
    cfg: &TrainConfig<F>,
) -> Result<(ClassifierModel<F>, TrainReport<F>)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid_input("cannot train on an empty dataset"));
    }
    let k = dataset.num_classes();
    let input_dim = feature_dim(dataset.samples()[0].signal.num_channels());
    let mut model = ClassifierModel::init(input_dim, k, cfg.hidden_width, cfg.seed)?;
    let mut warnings = Vec::new();

    let features: Vec<FeatureVector<F>> = dataset
        .iter()
        .map(|sample| extract_features(&sample.signal))
        .collect::<Result<_>>()?;

    let report = match cfg.regime {
        Regime::Baseline => {
            let pairs: Vec<(FeatureVector<F>, ReliabilityRecord<F>)> = dataset
                .iter()
                .zip(&features)
                .map(|(sample, f)| (f.clone(), baseline_record(sample.id.clone(), sample.label)))
                .collect();
            let history = train_stage(
                &mut model,
                &pairs,
                cfg,
                Stage::Stage1,
                0,
                cfg.total_epochs(),
            )?;
            TrainReport {
                regime: cfg.regime,
                n_samples: dataset.len(),
                n_augmented: 0,
                stages: vec![history],
                warnings,
            }
        }
        Regime::OneStage => {
            let by_id = index_records(dataset, records)?;
            let (pairs, n_augmented) =
                augmented_pairs(dataset, &features, &by_id, records, cfg, &mut warnings)?;
            let history = train_stage(
                &mut model,
                &pairs,
                cfg,
                Stage::Stage1,
                0,
                cfg.total_epochs(),
            )?;
            TrainReport {
                regime: cfg.regime,
                n_samples: dataset.len(),
                n_augmented,
                stages: vec![history],
                warnings,
            }
        }
        Regime::TwoStage => {
            let by_id = index_records(dataset, records)?;
            let confident: Vec<(FeatureVector<F>, ReliabilityRecord<F>)> = dataset
                .iter()
                .zip(&features)
                .filter(|(sample, _)| {
                    by_id[sample.id.as_str()].reliability == ReliabilityClass::Confident
                })
                .map(|(sample, f)| (f.clone(), by_id[sample.id.as_str()].clone()))
                .collect();
            if confident.is_empty() {
                warnings.push(
                    "degraded curriculum: no confident samples for stage 1; \
                     falling back to one-stage behavior"
                        .to_string(),
                );
                let (pairs, n_augmented) =
                    augmented_pairs(dataset, &features, &by_id, records, cfg, &mut warnings)?;
                let history = train_stage(
                    &mut model,
                    &pairs,
                    cfg,
                    Stage::Stage1,
                    0,
                    cfg.total_epochs(),
                )?;
                TrainReport {
                    regime: cfg.regime,
                    n_samples: dataset.len(),
                    n_augmented,
                    stages: vec![history],
                    warnings,
                }
            } else {
                let stage1 = train_stage(
                    &mut model,
                    &confident,
                    cfg,
                    Stage::Stage1,
                    0,
                    cfg.epochs_stage1,
                )?;
                let (pairs, n_augmented) =
                    augmented_pairs(dataset, &features, &by_id, records, cfg, &mut warnings)?;
                let stage2 = train_stage(
                    &mut model,
                    &pairs,
                    cfg,
                    Stage::Stage2,
                    cfg.epochs_stage1,
                    cfg.epochs_stage2,
                )?;
                TrainReport {
                    regime: cfg.regime,
                    n_samples: dataset.len(),
                    n_augmented,
                    stages: vec![stage1, stage2],
                    warnings,
                }
            }
        }
    };
    Ok((model, report))
}

/// The record a baseline run invents for a sample: its observed label as a
/// hard target at unit weight.
pub fn baseline_record<F: Scalar>(
    sample_id: String,
    label: crate::label::OrdinalLabel,
) -> ReliabilityRecord<F> {
    ReliabilityRecord {
        sample_id,
        gt: label,
        pred: label,
        discrepancy: 0,
        reliability: ReliabilityClass::Confident,
        stage: Stage::Stage1,
        weight: F::one(),
        target: Target::Hard(label),
    }
}

fn index_records<'r, F: Scalar>(
    dataset: &Dataset<F>,
    records: &'r [ReliabilityRecord<F>],
) -> Result<HashMap<&'r str, &'r ReliabilityRecord<F>>> {
    let mut by_id = HashMap::with_capacity(records.len());
    for record in records {
        if by_id.insert(record.sample_id.as_str(), record).is_some() {
            return Err(Error::data_integrity(format!(
                "duplicate reliability record for sample {}",
                record.sample_id
            )));
        }
    }
    for sample in dataset.iter() {
        if !by_id.contains_key(sample.id.as_str()) {
            return Err(Error::data_integrity(format!(
                "no reliability record for sample {}",
                sample.id
            )));
        }
    }
    Ok(by_id)
}

/// All original samples paired with their records, plus augmented samples
/// paired with theirs. Augmentation draws from the full dataset with
/// record weights; skipped classes become warnings.
fn augmented_pairs<F: Scalar>(
    dataset: &Dataset<F>,
    features: &[FeatureVector<F>],
    by_id: &HashMap<&str, &ReliabilityRecord<F>>,
    records: &[ReliabilityRecord<F>],
    cfg: &TrainConfig<F>,
    warnings: &mut Vec<String>,
) -> Result<(Vec<(FeatureVector<F>, ReliabilityRecord<F>)>, usize)> {
    let mut pairs: Vec<(FeatureVector<F>, ReliabilityRecord<F>)> = dataset
        .iter()
        .zip(features)
        .map(|(sample, f)| (f.clone(), by_id[sample.id.as_str()].clone()))
        .collect();
    let outcome = augment_dataset(dataset, records, &cfg.augment)?;
    for class in &outcome.skipped_classes {
        warnings.push(format!("augmentation skipped empty class {class}"));
    }
    let n_augmented = outcome.records.len();
    let augmented = &outcome.dataset.samples()[dataset.len()..];
    debug_assert_eq!(augmented.len(), n_augmented);
    for (sample, record) in augmented.iter().zip(outcome.records) {
        debug_assert_eq!(sample.id, record.sample_id);
        pairs.push((extract_features(&sample.signal)?, record));
    }
    Ok((pairs, n_augmented))
}
