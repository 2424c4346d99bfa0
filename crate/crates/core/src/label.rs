//! Ordinal labels, oracle discrepancy, reliability classes, soft targets and
//! per-sample weights — the bookkeeping that drives the two-stage curriculum.

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotationResult;
use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A class index on a K-level ordinal scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrdinalLabel {
    value: usize,
    k: usize,
}

impl OrdinalLabel {
    pub fn new(value: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid_input(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        if value >= k {
            return Err(Error::invalid_input(format!(
                "label value {value} out of range for {k} classes"
            )));
        }
        Ok(Self { value, k })
    }

    pub fn value(&self) -> usize {
        self.value
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }
}

/// A length-K probability distribution used as a training target.
///
/// By construction at most two entries are nonzero: the ground-truth class
/// and the oracle-predicted class of a one-level disagreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel<F: Scalar> {
    probs: Vec<F>,
}

impl<F: Scalar> SoftLabel<F> {
    /// Validates entries in [0, 1] summing to 1 (within 1e-9, widened to a
    /// few ulps for f32).
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid_input("soft label needs at least 2 classes"));
        }
        let mut sum = F::zero();
        for (i, &p) in probs.iter().enumerate() {
            if !(p >= F::zero() && p <= F::one()) {
                return Err(Error::invalid_input(format!(
                    "soft label entry {i} = {p} outside [0, 1]"
                )));
            }
            sum += p;
        }
        let tol = F::from_f64(1e-9).max(F::epsilon() * F::from_f64(8.0));
        if (sum - F::one()).abs() > tol {
            return Err(Error::invalid_input(format!(
                "soft label sums to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }
}

/// Reliability class of a sample, from the ground-truth/oracle discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityClass {
    /// Discrepancy 0 (agreement) or >= 2 (treated as an oracle failure; the
    /// human label is kept).
    Confident,
    /// Discrepancy exactly 1: adjacent levels, the genuinely subjective case.
    Ambiguous,
}

/// Curriculum stage a sample first becomes eligible in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage2,
}

/// Training target: one-hot ground truth, or a two-point soft distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target<F: Scalar> {
    Hard(OrdinalLabel),
    Soft(SoftLabel<F>),
}

impl<F: Scalar> Target<F> {
    /// Dense length-K probability vector for either variant.
    pub fn dense(&self, k: usize) -> Vec<F> {
        match self {
            Target::Hard(label) => {
                let mut t = vec![F::zero(); k];
                t[label.value()] = F::one();
                t
            }
            Target::Soft(soft) => soft.probs().to_vec(),
        }
    }

    pub fn is_soft(&self) -> bool {
        matches!(self, Target::Soft(_))
    }
}

/// Per-sample loss weights by reliability class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig<F: Scalar> {
    pub confident: F,
    pub ambiguous: F,
}

impl<F: Scalar> Default for WeightConfig<F> {
    fn default() -> Self {
        Self {
            confident: F::one(),
            ambiguous: F::from_f64(0.5),
        }
    }
}

impl<F: Scalar> WeightConfig<F> {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("confident", self.confident), ("ambiguous", self.ambiguous)] {
            if !(w > F::zero() && w <= F::one()) {
                return Err(Error::invalid_config(format!(
                    "weight {name} = {w} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Everything the trainer needs to know about one sample's label reliability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRecord<F: Scalar> {
    pub sample_id: String,
    pub gt: OrdinalLabel,
    pub pred: OrdinalLabel,
    pub discrepancy: usize,
    pub reliability: ReliabilityClass,
    pub stage: Stage,
    pub weight: F,
    pub target: Target<F>,
}

impl<F: Scalar> ReliabilityRecord<F> {
    /// Target and reliability class must agree (soft iff ambiguous).
    pub fn check_consistent(&self) -> Result<()> {
        let soft = self.target.is_soft();
        let ambiguous = self.reliability == ReliabilityClass::Ambiguous;
        if soft != ambiguous {
            return Err(Error::data_integrity(format!(
                "record {}: target kind does not match reliability class",
                self.sample_id
            )));
        }
        Ok(())
    }
}

/// Absolute difference between ground-truth and oracle labels.
pub fn discrepancy(gt: OrdinalLabel, pred: OrdinalLabel) -> Result<usize> {
    if gt.num_classes() != pred.num_classes() {
        return Err(Error::invalid_input(format!(
            "label scales differ: {} vs {} classes",
            gt.num_classes(),
            pred.num_classes()
        )));
    }
    Ok(gt.value().abs_diff(pred.value()))
}

/// Ambiguous iff the discrepancy is exactly one level.
pub fn classify_reliability(d: usize, k: usize) -> Result<ReliabilityClass> {
    if d >= k {
        return Err(Error::invalid_input(format!(
            "discrepancy {d} impossible on a {k}-class scale"
        )));
    }
    Ok(if d == 1 {
        ReliabilityClass::Ambiguous
    } else {
        ReliabilityClass::Confident
    })
}

pub fn stage_for(rc: ReliabilityClass) -> Stage {
    match rc {
        ReliabilityClass::Confident => Stage::Stage1,
        ReliabilityClass::Ambiguous => Stage::Stage2,
    }
}

/// Build the training target for a (ground truth, oracle prediction) pair.
///
/// A one-level disagreement yields a two-point soft label with `alpha` on the
/// ground truth and `1 - alpha` on the prediction; anything else keeps the
/// one-hot ground truth. `alpha` must lie in (0, 1]; at exactly 1 the soft
/// target degenerates to the one-hot ground truth.
pub fn make_soft_label<F: Scalar>(
    gt: OrdinalLabel,
    pred: OrdinalLabel,
    alpha: F,
) -> Result<Target<F>> {
    validate_alpha(alpha)?;
    let d = discrepancy(gt, pred)?;
    if d != 1 {
        return Ok(Target::Hard(gt));
    }
    let mut probs = vec![F::zero(); gt.num_classes()];
    probs[gt.value()] = alpha;
    probs[pred.value()] = F::one() - alpha;
    Ok(Target::Soft(SoftLabel::new(probs)?))
}

pub fn validate_alpha<F: Scalar>(alpha: F) -> Result<()> {
    if !(alpha > F::zero() && alpha <= F::one()) {
        return Err(Error::invalid_config(format!(
            "alpha = {alpha} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Loss weight for a reliability class.
pub fn reliability_weight<F: Scalar>(rc: ReliabilityClass, cfg: &WeightConfig<F>) -> Result<F> {
    cfg.validate()?;
    Ok(match rc {
        ReliabilityClass::Confident => cfg.confident,
        ReliabilityClass::Ambiguous => cfg.ambiguous,
    })
}

/// Build one [`ReliabilityRecord`] per sample from its annotation.
///
/// Every sample must have exactly one annotation; annotations for ids not in
/// `samples` are ignored (annotation caches may cover more data than one
/// split). The resulting Stage1/Stage2 pools partition the dataset.
pub fn build_reliability_records<F: Scalar>(
    samples: &[LabeledSample<F>],
    annotations: &[AnnotationResult],
    alpha: F,
    weights: &WeightConfig<F>,
) -> Result<Vec<ReliabilityRecord<F>>> {
    validate_alpha(alpha)?;
    weights.validate()?;

    let mut by_id = std::collections::HashMap::new();
    for ann in annotations {
        if by_id.insert(ann.sample_id.as_str(), ann).is_some() {
            return Err(Error::data_integrity(format!(
                "duplicate annotation for sample {}",
                ann.sample_id
            )));
        }
    }

    let mut records = Vec::with_capacity(samples.len());
    for sample in samples {
        let ann = by_id.get(sample.id.as_str()).ok_or_else(|| {
            Error::data_integrity(format!("no annotation for sample {}", sample.id))
        })?;
        records.push(build_record(
            sample.id.clone(),
            sample.label,
            ann.predicted,
            alpha,
            weights,
        )?);
    }
    Ok(records)
}

/// Build a single record for one (ground truth, prediction) pair.
pub fn build_record<F: Scalar>(
    sample_id: String,
    gt: OrdinalLabel,
    pred: OrdinalLabel,
    alpha: F,
    weights: &WeightConfig<F>,
) -> Result<ReliabilityRecord<F>> {
    let d = discrepancy(gt, pred)?;
    let reliability = classify_reliability(d, gt.num_classes())?;
    let record = ReliabilityRecord {
        sample_id,
        gt,
        pred,
        discrepancy: d,
        reliability,
        stage: stage_for(reliability),
        weight: reliability_weight(reliability, weights)?,
        target: make_soft_label(gt, pred, alpha)?,
    };
    record.check_consistent()?;
    Ok(record)
}
