//! Annotation oracles and supporting plumbing: the questionnaire schema, a
//! synthetic rule-based oracle, a remote-endpoint client, frame sampling,
//! the annotation cache, and Accepted/Rejected partitioning.

pub mod questionnaire;
pub mod remote;
pub mod synthetic;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::label::OrdinalLabel;
use crate::scalar::Scalar;

/// One YES/NO answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Answer {
    pub id: String,
    pub value: bool,
}

/// An oracle's output for one sample: per-question answers and a predicted
/// level. Annotations live alongside the dataset; they never replace the
/// human ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationResult {
    pub sample_id: String,
    pub answers: Vec<Answer>,
    pub predicted: OrdinalLabel,
    pub frames_used: usize,
    pub questions_used: Vec<String>,
}

impl AnnotationResult {
    /// Answers must cover exactly the questions used, in order.
    pub fn validate(&self) -> Result<()> {
        let answered: Vec<&str> = self.answers.iter().map(|a| a.id.as_str()).collect();
        let asked: Vec<&str> = self.questions_used.iter().map(String::as_str).collect();
        if answered != asked {
            return Err(Error::data_integrity(format!(
                "annotation for {} answers {:?} but was asked {:?}",
                self.sample_id, answered, asked
            )));
        }
        Ok(())
    }
}

/// Sample ids split by oracle/ground-truth agreement. Sets are disjoint and
/// together cover the annotated samples; ordered for stable serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionResult {
    pub accepted: BTreeSet<String>,
    pub rejected: BTreeSet<String>,
}

/// Pick `count` frame indices evenly spread over `0..length`. For two or
/// more frames the first and last indices are anchored at the ends; a single
/// frame comes from the middle.
pub fn sample_frames(length: usize, count: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::invalid_input("frame count must be at least 1"));
    }
    if length == 0 {
        return Err(Error::invalid_input(
            "cannot sample frames from an empty signal",
        ));
    }
    if count > length {
        return Err(Error::invalid_config(format!(
            "cannot sample {count} frames from {length}"
        )));
    }
    if count == 1 {
        return Ok(vec![((length - 1) as f64 / 2.0).round() as usize]);
    }
    let step = (length - 1) as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|k| (k as f64 * step).round() as usize)
        .collect())
}

/// Split samples into Accepted (oracle agrees with ground truth) and
/// Rejected (oracle disagrees). Requires one annotation per sample;
/// annotations for unknown ids are ignored.
pub fn partition<F: Scalar>(
    samples: &[LabeledSample<F>],
    annotations: &[AnnotationResult],
) -> Result<PartitionResult> {
    let mut by_id = HashMap::new();
    for ann in annotations {
        if by_id.insert(ann.sample_id.as_str(), ann).is_some() {
            return Err(Error::data_integrity(format!(
                "duplicate annotation for sample {}",
                ann.sample_id
            )));
        }
    }
    let mut accepted = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    for sample in samples {
        let ann = by_id.get(sample.id.as_str()).ok_or_else(|| {
            Error::data_integrity(format!("no annotation for sample {}", sample.id))
        })?;
        if ann.predicted.num_classes() != sample.label.num_classes() {
            return Err(Error::data_integrity(format!(
                "annotation for {} uses a {}-class scale, sample uses {}",
                sample.id,
                ann.predicted.num_classes(),
                sample.label.num_classes()
            )));
        }
        if ann.predicted == sample.label {
            accepted.insert(sample.id.clone());
        } else {
            rejected.insert(sample.id.clone());
        }
    }
    Ok(PartitionResult { accepted, rejected })
}

/// Lookup key for cached annotations: the sample, the frame budget, and the
/// question ids asked. Question *content* changes are caught separately via
/// the questionnaire content hash stored in file metadata.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub sample_id: String,
    pub frames: usize,
    pub question_ids: Vec<String>,
}

impl CacheKey {
    pub fn of(result: &AnnotationResult) -> Self {
        Self {
            sample_id: result.sample_id.clone(),
            frames: result.frames_used,
            question_ids: result.questions_used.clone(),
        }
    }
}

/// In-memory annotation cache with insertion-ordered iteration, backing the
/// JSON Lines cache file (one annotation per line). Re-inserting an existing
/// key overwrites (last write wins).
#[derive(Debug, Clone, Default)]
pub struct AnnotationCache {
    entries: Vec<AnnotationResult>,
    index: HashMap<CacheKey, usize>,
}

impl AnnotationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<AnnotationResult>) -> Result<Self> {
        let mut cache = Self::new();
        for entry in entries {
            entry.validate()?;
            cache.insert(entry);
        }
        Ok(cache)
    }

    pub fn get(&self, key: &CacheKey) -> Option<&AnnotationResult> {
        self.index.get(key).map(|&i| &self.entries[i])
    }

    pub fn insert(&mut self, result: AnnotationResult) {
        let key = CacheKey::of(&result);
        match self.index.get(&key) {
            Some(&i) => self.entries[i] = result,
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(result);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AnnotationResult] {
        &self.entries
    }
}
