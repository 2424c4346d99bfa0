//! Classification metrics — accuracy, weighted F1, tolerance accuracy,
//! confusion matrices — and per-subset breakdowns over an
//! accepted/rejected partition.

use serde::{Deserialize, Serialize};

use crate::annotate::PartitionResult;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_pair(preds: &[usize], labels: &[usize]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::invalid_input("cannot score an empty prediction set"));
    }
    if preds.len() != labels.len() {
        return Err(Error::invalid_input(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn check_range(values: &[usize], k: usize, what: &str) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| v >= k) {
        return Err(Error::invalid_input(format!(
            "{what} {v} out of range for {k} classes"
        )));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy<F: Scalar>(preds: &[usize], labels: &[usize]) -> Result<F> {
    check_pair(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(F::from_usize_lossy(hits) / F::from_usize_lossy(preds.len()))
}

/// Fraction of predictions within `tol` levels of the label.
pub fn tolerance_accuracy<F: Scalar>(preds: &[usize], labels: &[usize], tol: usize) -> Result<F> {
    check_pair(preds, labels)?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| p.abs_diff(l) <= tol)
        .count();
    Ok(F::from_usize_lossy(hits) / F::from_usize_lossy(preds.len()))
}

/// K×K count matrix; rows are true labels, columns predictions.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    check_pair(preds, labels)?;
    if k < 2 {
        return Err(Error::invalid_input("need at least 2 classes"));
    }
    check_range(preds, k, "prediction")?;
    check_range(labels, k, "label")?;
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &l) in preds.iter().zip(labels) {
        m[l][p] += 1;
    }
    Ok(m)
}

/// Support-weighted mean of per-class F1 scores. A class whose precision
/// and recall are both zero scores 0; a class with zero support carries
/// zero weight.
pub fn weighted_f1<F: Scalar>(preds: &[usize], labels: &[usize], k: usize) -> Result<F> {
    let m = confusion_matrix(preds, labels, k)?;
    let n = F::from_usize_lossy(preds.len());
    let mut total = F::zero();
    for class in 0..k {
        let support: usize = m[class].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = m[class][class];
        let predicted: usize = (0..k).map(|row| m[row][class]).sum();
        let precision = if predicted == 0 {
            F::zero()
        } else {
            F::from_usize_lossy(tp) / F::from_usize_lossy(predicted)
        };
        let recall = F::from_usize_lossy(tp) / F::from_usize_lossy(support);
        let f1 = if precision + recall > F::zero() {
            F::from_f64(2.0) * precision * recall / (precision + recall)
        } else {
            F::zero()
        };
        total += F::from_usize_lossy(support) / n * f1;
    }
    Ok(total)
}

/// Metrics over one subset. `None` marks a metric as undefined because the
/// subset is empty; it is never reported as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle<F: Scalar> {
    pub n: usize,
    pub accuracy: Option<F>,
    pub weighted_f1: Option<F>,
    pub tolerance_accuracy: Option<F>,
    pub confusion: Vec<Vec<usize>>,
}

impl<F: Scalar> MetricBundle<F> {
    fn compute(preds: &[usize], labels: &[usize], k: usize, tol: usize) -> Result<Self> {
        if preds.is_empty() {
            return Ok(Self {
                n: 0,
                accuracy: None,
                weighted_f1: None,
                tolerance_accuracy: None,
                confusion: vec![vec![0; k]; k],
            });
        }
        Ok(Self {
            n: preds.len(),
            accuracy: Some(accuracy(preds, labels)?),
            weighted_f1: Some(weighted_f1(preds, labels, k)?),
            tolerance_accuracy: Some(tolerance_accuracy(preds, labels, tol)?),
            confusion: confusion_matrix(preds, labels, k)?,
        })
    }
}

/// The full/accepted/rejected metric breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetBreakdown<F: Scalar> {
    pub full: MetricBundle<F>,
    pub accepted: MetricBundle<F>,
    pub rejected: MetricBundle<F>,
}

/// Full evaluation output: whole-set metrics plus the subset breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F: Scalar> {
    pub k: usize,
    /// Tolerance used for `tolerance_accuracy`.
    pub tolerance: usize,
    pub accuracy: F,
    pub weighted_f1: F,
    pub tolerance_accuracy: F,
    pub confusion: Vec<Vec<usize>>,
    pub per_subset: SubsetBreakdown<F>,
}

/// Score predictions overall and per partition cell. `ids`, `preds`, and
/// `labels` are parallel; the id set must exactly cover the partition.
pub fn evaluate_subsets<F: Scalar>(
    ids: &[String],
    preds: &[usize],
    labels: &[usize],
    k: usize,
    partition: &PartitionResult,
) -> Result<EvalReport<F>> {
    evaluate_subsets_with_tolerance(ids, preds, labels, k, partition, 1)
}

pub fn evaluate_subsets_with_tolerance<F: Scalar>(
    ids: &[String],
    preds: &[usize],
    labels: &[usize],
    k: usize,
    partition: &PartitionResult,
    tol: usize,
) -> Result<EvalReport<F>> {
    check_pair(preds, labels)?;
    if ids.len() != preds.len() {
        return Err(Error::invalid_input(format!(
            "{} ids vs {} predictions",
            ids.len(),
            preds.len()
        )));
    }
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::data_integrity(format!("duplicate id {id}")));
        }
    }
    if let Some(overlap) = partition.accepted.intersection(&partition.rejected).next() {
        return Err(Error::data_integrity(format!(
            "id {overlap} is both accepted and rejected"
        )));
    }
    if partition.accepted.len() + partition.rejected.len() != ids.len() {
        return Err(Error::data_integrity(format!(
            "partition covers {} ids, evaluation set has {}",
            partition.accepted.len() + partition.rejected.len(),
            ids.len()
        )));
    }

    let mut accepted_idx = Vec::new();
    let mut rejected_idx = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        if partition.accepted.contains(id) {
            accepted_idx.push(i);
        } else if partition.rejected.contains(id) {
            rejected_idx.push(i);
        } else {
            return Err(Error::data_integrity(format!(
                "id {id} missing from the partition"
            )));
        }
    }

    let select = |idx: &[usize]| -> (Vec<usize>, Vec<usize>) {
        (
            idx.iter().map(|&i| preds[i]).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (acc_p, acc_l) = select(&accepted_idx);
    let (rej_p, rej_l) = select(&rejected_idx);

    let full = MetricBundle::compute(preds, labels, k, tol)?;
    let accepted = MetricBundle::compute(&acc_p, &acc_l, k, tol)?;
    let rejected = MetricBundle::compute(&rej_p, &rej_l, k, tol)?;

    Ok(EvalReport {
        k,
        tolerance: tol,
        accuracy: full.accuracy.expect("full set is non-empty"),
        weighted_f1: full.weighted_f1.expect("full set is non-empty"),
        tolerance_accuracy: full.tolerance_accuracy.expect("full set is non-empty"),
        confusion: full.confusion.clone(),
        per_subset: SubsetBreakdown {
            full,
            accepted,
            rejected,
        },
    })
}

/// Render the subset table as plain text for terminal output.
pub fn render_report<F: Scalar>(report: &EvalReport<F>) -> String {
    let fmt = |v: &Option<F>| match v {
        Some(x) => format!("{:.4}", x.to_f64_lossy()),
        None => "-".to_string(),
    };
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>6} {:>10} {:>13} {:>10}\n",
        "subset", "n", "accuracy", "weighted_f1", "tol_acc"
    ));
    out.push_str(&format!(
        "{:-<10} {:->6} {:->10} {:->13} {:->10}\n",
        "", "", "", "", ""
    ));
    for (name, bundle) in [
        ("full", &report.per_subset.full),
        ("accepted", &report.per_subset.accepted),
        ("rejected", &report.per_subset.rejected),
    ] {
        out.push_str(&format!(
            "{:<10} {:>6} {:>10} {:>13} {:>10}\n",
            name,
            bundle.n,
            fmt(&bundle.accuracy),
            fmt(&bundle.weighted_f1),
            fmt(&bundle.tolerance_accuracy),
        ));
    }
    out
}
