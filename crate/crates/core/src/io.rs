//! Persistent file formats.
//!
//! Datasets, latent sidecars, and annotation caches are JSON Lines with a
//! `<file>.meta.json` companion carrying the producing config hash and
//! schema facts. Splits, checkpoints, questionnaires, and reports are
//! single JSON documents embedding their config hash directly. All writers
//! are deterministic, so equal inputs produce byte-identical files.

use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{AnnotationResult, PartitionResult};
use crate::data::{Dataset, LabeledSample, Latent, Signal};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::label::OrdinalLabel;
use crate::scalar::Scalar;
use crate::train::TrainReport;

/// Hex SHA-256 of a value's compact JSON encoding. Used to stamp every
/// output file with the configuration that produced it.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let encoded = serde_json::to_string(value)?;
    let digest = Sha256::digest(encoded.as_bytes());
    Ok(hex::encode(digest))
}

/// Metadata companion path: `train.jsonl` → `train.jsonl.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn parse_error(path: &Path, line: usize, err: serde_json::Error) -> Error {
    Error::data_integrity(format!("{}:{line}: {err}", path.display()))
}

fn io_error(path: &Path, err: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        err.kind(),
        format!("{}: {err}", path.display()),
    ))
}

/// Write items as JSON Lines (one compact document per line).
pub fn write_jsonl<T, I>(path: &Path, items: I) -> Result<()>
where
    T: Serialize,
    I: IntoIterator<Item = T>,
{
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e))?;
    Ok(())
}

/// Read JSON Lines, tolerating blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| parse_error(path, i + 1, e))?);
    }
    Ok(items)
}

/// Write one pretty-printed JSON document with a trailing newline.
pub fn write_json_doc<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let body = serde_json::to_string_pretty(value)?;
    file.write_all(body.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn read_json_doc<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&body).map_err(|e| parse_error(path, 1, e))
}

/// Sidecar facts for a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub config_hash: String,
    pub k: usize,
    pub n_samples: usize,
}

/// Wire form of one dataset line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "F: DeserializeOwned"))]
struct SampleLine<F: Scalar> {
    id: String,
    label: usize,
    channels: IndexMap<String, Vec<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    latent: Option<Latent<F>>,
}

/// Write a dataset as JSON Lines plus its metadata sidecar. With
/// `include_latent` false the latent block is stripped — the "blind" export
/// used for training files.
pub fn write_dataset<F: Scalar>(
    path: &Path,
    dataset: &Dataset<F>,
    config_hash: &str,
    include_latent: bool,
) -> Result<()> {
    let lines = dataset.iter().map(|sample| SampleLine {
        id: sample.id.clone(),
        label: sample.label.value(),
        channels: sample.signal.channels().clone(),
        latent: if include_latent {
            sample.latent.clone()
        } else {
            None
        },
    });
    write_jsonl(path, lines)?;
    let meta = DatasetMeta {
        config_hash: config_hash.to_string(),
        k: dataset.num_classes(),
        n_samples: dataset.len(),
    };
    write_json_doc(&meta_path(path), &meta)
}

/// Read a dataset written by [`write_dataset`]; the sidecar supplies K.
pub fn read_dataset<F: Scalar + DeserializeOwned>(
    path: &Path,
) -> Result<(Dataset<F>, DatasetMeta)> {
    let meta: DatasetMeta = read_json_doc(&meta_path(path))?;
    let lines: Vec<SampleLine<F>> = read_jsonl(path)?;
    if lines.len() != meta.n_samples {
        return Err(Error::data_integrity(format!(
            "{} has {} samples, sidecar says {}",
            path.display(),
            lines.len(),
            meta.n_samples
        )));
    }
    let samples = lines
        .into_iter()
        .map(|line| {
            Ok(LabeledSample {
                label: OrdinalLabel::new(line.label, meta.k)?,
                signal: Signal::new(line.channels)?,
                id: line.id,
                latent: line.latent,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(meta.k, samples)?, meta))
}

/// One line of the latent sidecar: the pre-noise label and the generator
/// metadata for a sample. Written next to blind exports so evaluation can
/// score against uncorrupted labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentRecord<F: Scalar> {
    pub id: String,
    pub pristine_label: usize,
    pub latent: Latent<F>,
}

pub fn write_latent_sidecar<F: Scalar>(
    path: &Path,
    records: &[LatentRecord<F>],
    config_hash: &str,
    k: usize,
) -> Result<()> {
    write_jsonl(path, records.iter())?;
    let meta = DatasetMeta {
        config_hash: config_hash.to_string(),
        k,
        n_samples: records.len(),
    };
    write_json_doc(&meta_path(path), &meta)
}

pub fn read_latent_sidecar<F: Scalar + DeserializeOwned>(
    path: &Path,
) -> Result<(Vec<LatentRecord<F>>, DatasetMeta)> {
    let meta: DatasetMeta = read_json_doc(&meta_path(path))?;
    let records: Vec<LatentRecord<F>> = read_jsonl(path)?;
    if records.len() != meta.n_samples {
        return Err(Error::data_integrity(format!(
            "{} has {} records, sidecar says {}",
            path.display(),
            records.len(),
            meta.n_samples
        )));
    }
    for record in &records {
        if record.pristine_label >= meta.k {
            return Err(Error::data_integrity(format!(
                "pristine label {} out of range for {} classes",
                record.pristine_label, meta.k
            )));
        }
    }
    Ok((records, meta))
}

/// Sidecar facts for an annotation cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationMeta {
    pub config_hash: String,
    pub questionnaire_version: u32,
    pub questionnaire_hash: u64,
    pub frames: usize,
    pub n_questions: usize,
}

pub fn write_annotations(
    path: &Path,
    annotations: &[AnnotationResult],
    meta: &AnnotationMeta,
) -> Result<()> {
    write_jsonl(path, annotations.iter())?;
    write_json_doc(&meta_path(path), meta)
}

pub fn read_annotations(path: &Path) -> Result<(Vec<AnnotationResult>, AnnotationMeta)> {
    let meta: AnnotationMeta = read_json_doc(&meta_path(path))?;
    let annotations: Vec<AnnotationResult> = read_jsonl(path)?;
    for ann in &annotations {
        ann.validate()?;
    }
    Ok((annotations, meta))
}

/// Persisted accepted/rejected split plus the discrepancy histogram
/// (index = discrepancy level, value = sample count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitDoc {
    pub config_hash: String,
    pub accepted: Vec<String>,
    pub rejected: Vec<String>,
    pub discrepancy_histogram: Vec<usize>,
}

impl SplitDoc {
    pub fn new(partition: &PartitionResult, histogram: Vec<usize>, config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            accepted: partition.accepted.iter().cloned().collect(),
            rejected: partition.rejected.iter().cloned().collect(),
            discrepancy_histogram: histogram,
        }
    }

    pub fn partition(&self) -> Result<PartitionResult> {
        let accepted: std::collections::BTreeSet<String> = self.accepted.iter().cloned().collect();
        let rejected: std::collections::BTreeSet<String> = self.rejected.iter().cloned().collect();
        if accepted.len() != self.accepted.len() || rejected.len() != self.rejected.len() {
            return Err(Error::data_integrity("split file lists a duplicate id"));
        }
        if let Some(id) = accepted.intersection(&rejected).next() {
            return Err(Error::data_integrity(format!(
                "split file lists {id} as both accepted and rejected"
            )));
        }
        Ok(PartitionResult { accepted, rejected })
    }
}

/// Persisted training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReportDoc<F: Scalar> {
    pub config_hash: String,
    pub report: TrainReport<F>,
}

/// Which labels an evaluation scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Pre-noise labels from the latent sidecar.
    Pristine,
    /// The labels present in the dataset file (possibly noisy).
    Observed,
}

/// Persisted evaluation report; records which label source was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReportDoc<F: Scalar> {
    pub config_hash: String,
    pub label_source: LabelSource,
    pub report: EvalReport<F>,
}
