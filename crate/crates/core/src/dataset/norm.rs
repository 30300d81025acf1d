//! Z-score standardization of features and target.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::num::Real;

/// Per-feature and target mean / standard deviation, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NormStats<T: Real> {
    pub feature_mean: Vec<T>,
    pub feature_std: Vec<T>,
    pub target_mean: T,
    pub target_std: T,
}

fn mean_std<T: Real>(values: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = T::from_usize_lossy(values.clone().count());
    let mean = values.clone().sum::<T>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

impl<T: Real> NormStats<T> {
    /// Identity transform for `dim` features.
    pub fn identity(dim: usize) -> Self {
        NormStats {
            feature_mean: vec![T::zero(); dim],
            feature_std: vec![T::one(); dim],
            target_mean: T::zero(),
            target_std: T::one(),
        }
    }

    /// Fits statistics on row-major `features` (`dim` columns) and `targets`.
    pub fn fit(features: &[T], dim: usize, targets: &[T]) -> Result<Self> {
        ensure!(dim > 0, "feature dimension must be positive");
        ensure!(!targets.is_empty(), "cannot fit normalization on no rows");
        ensure!(
            features.len() == dim * targets.len(),
            "feature matrix has {} values, expected {} x {}",
            features.len(),
            targets.len(),
            dim
        );
        let mut feature_mean = Vec::with_capacity(dim);
        let mut feature_std = Vec::with_capacity(dim);
        for c in 0..dim {
            let (m, s) = mean_std(features.iter().skip(c).step_by(dim).copied());
            ensure!(s > T::zero(), "feature {c} is constant over the training rows");
            feature_mean.push(m);
            feature_std.push(s);
        }
        let (target_mean, target_std) = mean_std(targets.iter().copied());
        ensure!(target_std > T::zero(), "target is constant over the training rows");
        Ok(NormStats {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn apply_features(&self, row: &mut [T]) {
        for ((v, &m), &s) in row.iter_mut().zip(&self.feature_mean).zip(&self.feature_std) {
            *v = (*v - m) / s;
        }
    }

    pub fn invert_features(&self, row: &mut [T]) {
        for ((v, &m), &s) in row.iter_mut().zip(&self.feature_mean).zip(&self.feature_std) {
            *v = *v * s + m;
        }
    }

    pub fn apply_target(&self, y: T) -> T {
        (y - self.target_mean) / self.target_std
    }

    pub fn invert_target(&self, y: T) -> T {
        y * self.target_std + self.target_mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standardized_training_features() {
        let feats: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 * 0.1 + (i % 3) as f64).collect();
        let targets: Vec<f64> = (0..100).map(|i| -20.0 + (i as f64).sin()).collect();
        let stats = NormStats::fit(&feats, 3, &targets).unwrap();
        let mut z = feats.clone();
        for row in z.chunks_mut(3) {
            stats.apply_features(row);
        }
        for c in 0..3 {
            let col: Vec<f64> = z.iter().skip(c).step_by(3).copied().collect();
            let m = col.iter().sum::<f64>() / 100.0;
            let s = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 100.0).sqrt();
            assert!(m.abs() < 1e-9);
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_feature_rejected() {
        let feats = vec![1.0, 2.0, 1.0, 3.0, 1.0, 4.0];
        assert!(NormStats::fit(&feats, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(NormStats::fit(&[1.0, 2.0, 3.0], 1, &[5.0, 5.0, 5.0]).is_err());
        assert!(NormStats::<f64>::fit(&[], 1, &[]).is_err());
    }

    #[test]
    fn held_out_rows_use_training_stats() {
        let stats = NormStats::fit(&[0.0, 2.0], 1, &[0.0, 2.0]).unwrap();
        let mut row = [4.0];
        stats.apply_features(&mut row);
        assert_eq!(row[0], 3.0);
    }

    proptest! {
        #[test]
        fn round_trip(a in -50.0f64..50.0, b in 0.0f64..7.0, c in -1e3f64..1e3, y in -60.0f64..0.0) {
            let stats = NormStats {
                feature_mean: vec![1.5, -2.0, 30.0],
                feature_std: vec![0.7, 3.1, 250.0],
                target_mean: -22.0,
                target_std: 3.3,
            };
            let orig = [a, b, c];
            let mut row = orig;
            stats.apply_features(&mut row);
            stats.invert_features(&mut row);
            for (u, v) in row.iter().zip(&orig) {
                prop_assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
            let back = stats.invert_target(stats.apply_target(y));
            prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}
