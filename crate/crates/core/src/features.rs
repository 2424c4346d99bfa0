//! Fixed summary-statistics featurization: five statistics per channel,
//! concatenated in channel order.

use crate::data::Signal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Statistics per channel: mean, population standard deviation, min, max,
/// mean absolute first difference.
pub const STATS_PER_CHANNEL: usize = 5;

pub type FeatureVector<F> = Vec<F>;

/// Feature dimensionality for a signal with `num_channels` channels.
pub fn feature_dim(num_channels: usize) -> usize {
    STATS_PER_CHANNEL * num_channels
}

/// Extract the per-channel summary statistics, concatenated in channel
/// order. Length-independent: signals of any positive length featurize to
/// the same dimensionality.
pub fn extract_features<F: Scalar>(signal: &Signal<F>) -> Result<FeatureVector<F>> {
    let mut features = Vec::with_capacity(feature_dim(signal.num_channels()));
    for (name, values) in signal.channels() {
        if values.is_empty() {
            return Err(Error::invalid_input(format!("channel {name} is empty")));
        }
        let n = F::from_usize_lossy(values.len());
        let mean = values.iter().cloned().sum::<F>() / n;
        let variance = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
        let std = variance.sqrt();
        let min = values.iter().cloned().fold(F::infinity(), F::min);
        let max = values.iter().cloned().fold(F::neg_infinity(), F::max);
        let mean_abs_diff = if values.len() < 2 {
            F::zero()
        } else {
            values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<F>()
                / F::from_usize_lossy(values.len() - 1)
        };
        features.extend_from_slice(&[mean, std, min, max, mean_abs_diff]);
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    fn signal(channels: &[(&str, &[f64])]) -> Signal<f64> {
        Signal::new(
            channels
                .iter()
                .map(|(name, values)| (name.to_string(), values.to_vec()))
                .collect::<IndexMap<_, _>>(),
        )
        .unwrap()
    }

    #[test]
    fn constant_channel_statistics() {
        let f = extract_features(&signal(&[("c", &[3.5; 6])])).unwrap();
        assert_eq!(f, vec![3.5, 0.0, 3.5, 3.5, 0.0]);
    }

    #[test]
    fn alternating_channel_has_unit_mean_abs_diff() {
        let f = extract_features(&signal(&[("c", &[0.0, 1.0, 0.0, 1.0])])).unwrap();
        assert_eq!(f[4], 1.0);
        assert_eq!(f[0], 0.5);
        assert_eq!(f[2], 0.0);
        assert_eq!(f[3], 1.0);
    }

    #[test]
    fn hand_recomputed_fixture() {
        // Values [1, 2, 4, 7]: mean 3.5, population variance
        // ((2.5)²+(1.5)²+(0.5)²+(3.5)²)/4 = 5.25, abs diffs (1, 2, 3) → 2.
        let f = extract_features(&signal(&[("c", &[1.0, 2.0, 4.0, 7.0])])).unwrap();
        assert!((f[0] - 3.5).abs() < 1e-15);
        assert!((f[1] - 5.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[3], 7.0);
        assert!((f[4] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn channels_concatenate_in_order() {
        let f = extract_features(&signal(&[("b", &[1.0, 1.0]), ("a", &[2.0, 2.0])])).unwrap();
        assert_eq!(f.len(), feature_dim(2));
        assert_eq!(f[0], 1.0);
        assert_eq!(f[5], 2.0);
    }

    #[test]
    fn single_frame_signals_featurize() {
        let f = extract_features(&signal(&[("c", &[4.0])])).unwrap();
        assert_eq!(f, vec![4.0, 0.0, 4.0, 4.0, 0.0]);
    }
}
