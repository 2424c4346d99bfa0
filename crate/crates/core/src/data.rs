//! Core data carriers: multichannel signals, labeled samples, and datasets
//! with optional latent generator metadata.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::OrdinalLabel;
use crate::scalar::Scalar;

/// A fixed-length multichannel time series. Channel order is preserved and
/// meaningful (feature extraction and serialization both follow it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal<F: Scalar> {
    channels: IndexMap<String, Vec<F>>,
}

impl<F: Scalar> Signal<F> {
    /// All channels must be non-empty, finite, and of identical length.
    pub fn new(channels: IndexMap<String, Vec<F>>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid_input("signal has no channels"));
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::invalid_input("signal channels are empty"));
        }
        for (name, values) in &channels {
            if values.len() != len {
                return Err(Error::invalid_input(format!(
                    "channel {name} has length {}, expected {len}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid_input(format!(
                    "channel {name} contains a non-finite value"
                )));
            }
        }
        Ok(Self { channels })
    }

    pub fn num_frames(&self) -> usize {
        self.channels[0].len()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channel(&self, name: &str) -> Option<&[F]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn channels(&self) -> &IndexMap<String, Vec<F>> {
        &self.channels
    }
}

/// Latent generator metadata attached to synthetic samples: the true level
/// used to synthesize the channels and the clean per-channel means. Kept for
/// evaluation and oracle calibration, stripped from blind training exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latent<F: Scalar> {
    pub level: usize,
    pub params: IndexMap<String, F>,
}

/// One sample: an identifier, a ground-truth ordinal label, the signal, and
/// (for synthetic data) the latent metadata that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample<F: Scalar> {
    pub id: String,
    pub label: OrdinalLabel,
    pub signal: Signal<F>,
    pub latent: Option<Latent<F>>,
}

/// A homogeneous collection of samples sharing one K-level label scale and
/// one channel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F: Scalar> {
    k: usize,
    samples: Vec<LabeledSample<F>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(k: usize, samples: Vec<LabeledSample<F>>) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid_input(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for sample in &samples {
            if sample.label.num_classes() != k {
                return Err(Error::data_integrity(format!(
                    "sample {} is labeled on a {}-class scale, dataset uses {k}",
                    sample.id,
                    sample.label.num_classes()
                )));
            }
            if !seen.insert(sample.id.as_str()) {
                return Err(Error::data_integrity(format!(
                    "duplicate sample id {}",
                    sample.id
                )));
            }
        }
        if let Some(first) = samples.first() {
            let layout: Vec<&str> = first.signal.channel_names().collect();
            for sample in &samples[1..] {
                let names: Vec<&str> = sample.signal.channel_names().collect();
                if names != layout {
                    return Err(Error::data_integrity(format!(
                        "sample {} channel layout {:?} differs from {:?}",
                        sample.id, names, layout
                    )));
                }
            }
        }
        Ok(Self { k, samples })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample<F>] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSample<F>> {
        self.samples.iter()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledSample<F>> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Appends samples, revalidating scale, id uniqueness, and layout.
    pub fn extend(self, extra: Vec<LabeledSample<F>>) -> Result<Self> {
        let mut samples = self.samples;
        samples.extend(extra);
        Self::new(self.k, samples)
    }

    /// Per-class sample counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for sample in &self.samples {
            counts[sample.label.value()] += 1;
        }
        counts
    }
}
