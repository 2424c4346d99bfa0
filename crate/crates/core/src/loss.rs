//! Softmax head, soft (KL) and hard (cross-entropy) losses, per-sample
//! dispatch, the reliability-weighted batch loss, analytic gradients, and a
//! finite-difference gradient checker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{OrdinalLabel, ReliabilityRecord, SoftLabel};
use crate::scalar::Scalar;

/// Probabilities below this are clamped before taking logarithms, guarding
/// against denormals and post-underflow zeros from extreme logits.
pub const MIN_PROB: f64 = 1e-12;

/// Unnormalized class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Logits<F: Scalar> {
    z: Vec<F>,
}

impl<F: Scalar> Logits<F> {
    pub fn new(z: Vec<F>) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::invalid_input("logits need at least 2 classes"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("logits contain a non-finite value"));
        }
        Ok(Self { z })
    }

    pub fn values(&self) -> &[F] {
        &self.z
    }

    pub fn num_classes(&self) -> usize {
        self.z.len()
    }
}

/// A normalized class distribution, as produced by [`softmax`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probabilities<F: Scalar> {
    p: Vec<F>,
}

impl<F: Scalar> Probabilities<F> {
    /// Entries must lie in [0, 1] and sum to 1 (within 1e-9, widened to a
    /// few ulps for f32). Exact zeros are tolerated: softmax underflows for
    /// very spread-out logits, and the losses clamp before taking logs.
    pub fn new(p: Vec<F>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::invalid_input(
                "probabilities need at least 2 classes",
            ));
        }
        let mut sum = F::zero();
        for (i, &v) in p.iter().enumerate() {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::invalid_input(format!(
                    "probability entry {i} = {v} outside [0, 1]"
                )));
            }
            sum += v;
        }
        let tol = F::from_f64(1e-9).max(F::epsilon() * F::from_f64(8.0));
        if (sum - F::one()).abs() > tol {
            return Err(Error::invalid_input(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { p })
    }

    pub fn values(&self) -> &[F] {
        &self.p
    }

    pub fn num_classes(&self) -> usize {
        self.p.len()
    }
}

/// Numerically stable softmax via max-shift.
pub fn softmax<F: Scalar>(z: &Logits<F>) -> Result<Probabilities<F>> {
    let max = z.values().iter().cloned().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = z.values().iter().map(|&v| (v - max).exp()).collect();
    let sum: F = exps.iter().cloned().sum();
    Probabilities::new(exps.into_iter().map(|e| e / sum).collect())
}

fn clamped_ln<F: Scalar>(p: F) -> Result<F> {
    if !p.is_finite() || p < F::zero() {
        return Err(Error::numeric_domain(format!(
            "invalid probability {p} under log"
        )));
    }
    Ok(p.max(F::from_f64(MIN_PROB)).ln())
}

/// KL divergence of the soft target from the prediction, with 0·ln 0 = 0.
/// Always non-negative; zero iff the distributions coincide.
pub fn kl_soft_loss<F: Scalar>(s: &SoftLabel<F>, p: &Probabilities<F>) -> Result<F> {
    if s.num_classes() != p.num_classes() {
        return Err(Error::invalid_input(format!(
            "target has {} classes, prediction {}",
            s.num_classes(),
            p.num_classes()
        )));
    }
    let mut loss = F::zero();
    for (&si, &pi) in s.probs().iter().zip(p.values()) {
        if si > F::zero() {
            loss += si * (si.ln() - clamped_ln(pi)?);
        }
    }
    Ok(loss)
}

/// Negative log-likelihood of the labeled class.
pub fn cross_entropy_loss<F: Scalar>(p: &Probabilities<F>, y: OrdinalLabel) -> Result<F> {
    if y.num_classes() != p.num_classes() {
        return Err(Error::invalid_input(format!(
            "label on a {}-class scale, prediction has {}",
            y.num_classes(),
            p.num_classes()
        )));
    }
    Ok(-clamped_ln(p.values()[y.value()])?)
}

/// Dispatches to the soft (KL) or hard (cross-entropy) loss by target kind.
///
/// With a one-hot soft target this reduces to the hard loss bit-for-bit:
/// the single unit entry contributes 1·(ln 1 − ln p) = −ln p.
pub fn per_sample_loss<F: Scalar>(
    record: &ReliabilityRecord<F>,
    p: &Probabilities<F>,
) -> Result<F> {
    record.check_consistent()?;
    match &record.target {
        crate::label::Target::Soft(s) => kl_soft_loss(s, p),
        crate::label::Target::Hard(y) => cross_entropy_loss(p, *y),
    }
}

/// Reliability-weighted mean loss over a batch: (1/N) Σ w_j L_j.
pub fn batch_loss<F: Scalar>(
    records: &[ReliabilityRecord<F>],
    preds: &[Probabilities<F>],
) -> Result<F> {
    if records.is_empty() {
        return Err(Error::invalid_input("empty batch"));
    }
    if records.len() != preds.len() {
        return Err(Error::invalid_input(format!(
            "{} records but {} predictions",
            records.len(),
            preds.len()
        )));
    }
    let mut total = F::zero();
    for (record, p) in records.iter().zip(preds) {
        total += record.weight * per_sample_loss(record, p)?;
    }
    Ok(total / F::from_usize_lossy(records.len()))
}

/// Analytic gradient of the per-sample loss with respect to the logits:
/// softmax(z) − t, where t is the dense (soft or one-hot) target. The
/// sample's weight is applied by the batch context, not here.
pub fn loss_gradient_wrt_logits<F: Scalar>(
    record: &ReliabilityRecord<F>,
    z: &Logits<F>,
) -> Result<Vec<F>> {
    record.check_consistent()?;
    let p = softmax(z)?;
    let t = record.target.dense(z.num_classes());
    if t.len() != z.num_classes() {
        return Err(Error::invalid_input(format!(
            "target has {} classes, logits {}",
            t.len(),
            z.num_classes()
        )));
    }
    Ok(p.values().iter().zip(t).map(|(&pi, ti)| pi - ti).collect())
}

/// Central-difference check of the analytic gradient. Returns the maximum
/// over coordinates of |difference| / max(1, |analytic|).
pub fn finite_difference_check<F: Scalar>(
    record: &ReliabilityRecord<F>,
    z: &Logits<F>,
    eps: F,
) -> Result<F> {
    let lo = F::from_f64(1e-8);
    let hi = F::from_f64(1e-3);
    if !(eps >= lo && eps <= hi) {
        return Err(Error::invalid_input(format!(
            "eps = {eps} outside [1e-8, 1e-3]"
        )));
    }
    let analytic = loss_gradient_wrt_logits(record, z)?;
    let mut worst = F::zero();
    for i in 0..z.num_classes() {
        let mut plus = z.values().to_vec();
        plus[i] += eps;
        let mut minus = z.values().to_vec();
        minus[i] -= eps;
        let lp = per_sample_loss(record, &softmax(&Logits::new(plus)?)?)?;
        let lm = per_sample_loss(record, &softmax(&Logits::new(minus)?)?)?;
        let numeric = (lp - lm) / (F::from_f64(2.0) * eps);
        let err = (numeric - analytic[i]).abs() / F::one().max(analytic[i].abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{make_soft_label, ReliabilityClass, Stage, Target};
    use proptest::prelude::*;
    use rand::Rng;

    fn label(value: usize, k: usize) -> OrdinalLabel {
        OrdinalLabel::new(value, k).unwrap()
    }

    fn hard_record(y: usize, k: usize, weight: f64) -> ReliabilityRecord<f64> {
        ReliabilityRecord {
            sample_id: format!("h{y}"),
            gt: label(y, k),
            pred: label(y, k),
            discrepancy: 0,
            reliability: ReliabilityClass::Confident,
            stage: Stage::Stage1,
            weight,
            target: Target::Hard(label(y, k)),
        }
    }

    fn soft_record(
        y: usize,
        pred: usize,
        k: usize,
        alpha: f64,
        weight: f64,
    ) -> ReliabilityRecord<f64> {
        ReliabilityRecord {
            sample_id: format!("s{y}{pred}"),
            gt: label(y, k),
            pred: label(pred, k),
            discrepancy: 1,
            reliability: ReliabilityClass::Ambiguous,
            stage: Stage::Stage2,
            weight,
            target: make_soft_label(label(y, k), label(pred, k), alpha).unwrap(),
        }
    }

    fn uniform(k: usize) -> Probabilities<f64> {
        Probabilities::new(vec![1.0 / k as f64; k]).unwrap()
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax(&Logits::new(vec![0.0f64; 4]).unwrap()).unwrap();
        for &v in p.values() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        for c in [-1000.0f64, -3.5, 0.0, 7.25, 1000.0] {
            let p = softmax(&Logits::new(vec![c, c + 2.0f64.ln()]).unwrap()).unwrap();
            assert!((p.values()[0] - 1.0 / 3.0).abs() < 1e-12, "c = {c}");
            assert!((p.values()[1] - 2.0 / 3.0).abs() < 1e-12, "c = {c}");
        }
    }

    #[test]
    fn softmax_survives_extreme_logits() {
        let p = softmax(&Logits::new(vec![1000.0f64, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(p.values()[0] > 1.0 - 1e-12);
        assert!(p.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let s = SoftLabel::new(vec![0.7f64, 0.3]).unwrap();
        let p = Probabilities::new(vec![0.7f64, 0.3]).unwrap();
        assert!(kl_soft_loss(&s, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kl_against_uniform_matches_scalar_evaluation() {
        // 0.7·ln(0.7/0.25) + 0.3·ln(0.3/0.25), evaluated independently.
        let s = SoftLabel::new(vec![0.7f64, 0.3, 0.0, 0.0]).unwrap();
        let got = kl_soft_loss(&s, &uniform(4)).unwrap();
        assert!((got - 0.7754300590649971).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn kl_with_point_mass_reduces_to_cross_entropy() {
        let s = SoftLabel::new(vec![0.0f64, 1.0, 0.0]).unwrap();
        let p = Probabilities::new(vec![0.2f64, 0.5, 0.3]).unwrap();
        let kl = kl_soft_loss(&s, &p).unwrap();
        let ce = cross_entropy_loss(&p, label(1, 3)).unwrap();
        assert_eq!(kl, ce);
    }

    #[test]
    fn cross_entropy_known_values() {
        let ce = cross_entropy_loss(&uniform(4), label(2, 4)).unwrap();
        assert!((ce - 4.0f64.ln()).abs() < 1e-15);

        let p = Probabilities::new(vec![0.1f64, 0.2, 0.3, 0.4]).unwrap();
        let ce = cross_entropy_loss(&p, label(0, 4)).unwrap();
        assert!((ce - 2.302585092994046).abs() < 1e-12, "got {ce}");

        let eps = 1e-9f64;
        let p = Probabilities::new(vec![1.0 - 3.0 * eps, eps, eps, eps]).unwrap();
        let ce = cross_entropy_loss(&p, label(0, 4)).unwrap();
        assert!((ce - 3.0 * eps).abs() < 1e-12);
    }

    #[test]
    fn per_sample_loss_dispatches_by_target() {
        let soft = soft_record(2, 3, 4, 0.7, 0.5);
        let got = per_sample_loss(&soft, &uniform(4)).unwrap();
        assert!((got - 0.7754300590649971).abs() < 1e-12);

        let hard = hard_record(2, 4, 1.0);
        let got = per_sample_loss(&hard, &uniform(4)).unwrap();
        assert!((got - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn per_sample_loss_rejects_inconsistent_records() {
        let mut bad = hard_record(2, 4, 1.0);
        bad.reliability = ReliabilityClass::Ambiguous;
        assert!(matches!(
            per_sample_loss(&bad, &uniform(4)),
            Err(Error::DataIntegrity(_))
        ));
    }

    #[test]
    fn soft_loss_at_alpha_one_matches_hard_loss() {
        let p = Probabilities::new(vec![0.1f64, 0.2, 0.3, 0.4]).unwrap();
        let soft = soft_record(2, 3, 4, 1.0, 1.0);
        let hard = hard_record(2, 4, 1.0);
        let ls = kl_soft_loss(
            match &soft.target {
                Target::Soft(s) => s,
                Target::Hard(_) => unreachable!(),
            },
            &p,
        )
        .unwrap();
        let lh = per_sample_loss(&hard, &p).unwrap();
        assert!((ls - lh).abs() < 1e-12);
    }

    #[test]
    fn batch_loss_weighted_mean() {
        // Weights (1.0, 0.5) against losses (ln 4, ln 4): (1·L + 0.5·L)/2.
        let records = vec![hard_record(0, 4, 1.0), soft_record(1, 2, 4, 0.7, 0.5)];
        let preds = vec![uniform(4), uniform(4)];
        let got = batch_loss(&records, &preds).unwrap();
        let l0 = per_sample_loss(&records[0], &preds[0]).unwrap();
        let l1 = per_sample_loss(&records[1], &preds[1]).unwrap();
        assert!((got - (1.0 * l0 + 0.5 * l1) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn batch_loss_rejects_empty_and_mismatched() {
        assert!(batch_loss::<f64>(&[], &[]).is_err());
        let records = vec![hard_record(0, 4, 1.0)];
        assert!(batch_loss(&records, &[]).is_err());
    }

    #[test]
    fn batch_loss_is_permutation_invariant() {
        let records = vec![
            hard_record(0, 4, 1.0),
            soft_record(1, 2, 4, 0.7, 0.5),
            hard_record(3, 4, 1.0),
        ];
        let preds = vec![
            softmax(&Logits::new(vec![0.3f64, -0.1, 2.0, 0.0]).unwrap()).unwrap(),
            softmax(&Logits::new(vec![1.0f64, 0.5, -0.5, 0.2]).unwrap()).unwrap(),
            softmax(&Logits::new(vec![-1.0f64, 0.0, 0.7, 0.1]).unwrap()).unwrap(),
        ];
        let forward = batch_loss(&records, &preds).unwrap();
        let rev_records: Vec<_> = records.iter().rev().cloned().collect();
        let rev_preds: Vec<_> = preds.iter().rev().cloned().collect();
        let backward = batch_loss(&rev_records, &rev_preds).unwrap();
        assert!((forward - backward).abs() < 1e-12);
    }

    #[test]
    fn gradient_zero_at_optimum() {
        // Uniform target with uniform prediction: p − t = 0.
        let z = Logits::new(vec![0.0f64, 0.0]).unwrap();
        let record = soft_record(0, 1, 2, 0.5, 1.0);
        let g = loss_gradient_wrt_logits(&record, &z).unwrap();
        for v in g {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_is_probability_minus_one_hot() {
        let z = Logits::new(vec![0.0f64, 0.0]).unwrap();
        let record = hard_record(0, 2, 1.0);
        let g = loss_gradient_wrt_logits(&record, &z).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15);
        assert!((g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn finite_differences_validate_gradients_over_random_fixtures() {
        let mut rng = crate::rng::derive_rng(7, &[0x10ad]);
        for trial in 0..100 {
            let k = 4;
            let z: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let z = Logits::new(z).unwrap();
            let y = rng.random_range(0..k);
            let record = match trial % 3 {
                0 => hard_record(y, k, 1.0),
                1 => soft_record(y, if y + 1 < k { y + 1 } else { y - 1 }, k, 0.7, 0.5),
                _ => soft_record(y, if y + 1 < k { y + 1 } else { y - 1 }, k, 0.5, 1.0),
            };
            let err = finite_difference_check(&record, &z, 1e-5).unwrap();
            assert!(err < 1e-4, "trial {trial}: relative error {err}");
        }
    }

    #[test]
    fn finite_difference_check_rejects_bad_eps() {
        let z = Logits::new(vec![0.0f64, 0.0]).unwrap();
        let record = hard_record(0, 2, 1.0);
        assert!(finite_difference_check(&record, &z, 1e-9).is_err());
        assert!(finite_difference_check(&record, &z, 1e-2).is_err());
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative_and_zero_iff_equal(raw_s in proptest::collection::vec(0.01f64..1.0, 4), raw_p in proptest::collection::vec(0.01f64..1.0, 4)) {
            let sum_s: f64 = raw_s.iter().sum();
            let sum_p: f64 = raw_p.iter().sum();
            let s = SoftLabel::new(raw_s.iter().map(|v| v / sum_s).collect()).unwrap();
            let p = Probabilities::new(raw_p.iter().map(|v| v / sum_p).collect()).unwrap();
            let kl = kl_soft_loss(&s, &p).unwrap();
            prop_assert!(kl >= -1e-15);

            let close = s
                .probs()
                .iter()
                .zip(p.values())
                .all(|(a, b)| (a - b).abs() < 1e-9);
            if close {
                prop_assert!(kl.abs() < 1e-7);
            }
            let p_self = Probabilities::new(s.probs().to_vec()).unwrap();
            prop_assert!(kl_soft_loss(&s, &p_self).unwrap().abs() < 1e-12);
        }

        #[test]
        fn gradient_entries_sum_to_zero(z in proptest::collection::vec(-5.0f64..5.0, 4), y in 0usize..4) {
            let record = hard_record(y, 4, 1.0);
            let g = loss_gradient_wrt_logits(&record, &Logits::new(z).unwrap()).unwrap();
            let sum: f64 = g.iter().sum();
            prop_assert!(sum.abs() < 1e-12);
        }
    }
}
