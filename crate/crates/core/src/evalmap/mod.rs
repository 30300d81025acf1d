//! Accuracy metrics, radio maps, timing and experiment campaigns.

pub mod bench;
pub mod campaign;
pub mod map;
pub mod model;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ensure, Result};
use crate::num::Real;

pub use bench::{benchmark, hardware_note, TimingReport};
pub use campaign::{run_campaign, CampaignSpec, ExperimentSpec};
pub use map::{half_diagonal_points, predict_map, predicted_profile, simulate_map, simulated_profile, MapSource, RadioMap};
pub use model::{fit_splits, prepare_splits, train_model, ModelKind, Predictor, TrainSpec, TrainedModel};

fn check_pairs<T>(predictions: &[T], truths: &[T]) -> Result<()> {
    ensure!(!truths.is_empty(), "no values to compare");
    ensure!(
        predictions.len() == truths.len(),
        "{} predictions for {} true values",
        predictions.len(),
        truths.len()
    );
    Ok(())
}

/// Mean absolute error.
pub fn mae<T: Real>(predictions: &[T], truths: &[T]) -> Result<T> {
    check_pairs(predictions, truths)?;
    let s: T = predictions.iter().zip(truths).map(|(p, t)| (*p - *t).abs()).sum();
    Ok(s / T::from_usize_lossy(truths.len()))
}

/// Mean absolute percentage error, in percent.
pub fn mape<T: Real>(predictions: &[T], truths: &[T]) -> Result<T> {
    check_pairs(predictions, truths)?;
    ensure!(
        truths.iter().all(|t| *t != T::zero()),
        "percentage error is undefined for a true value of 0"
    );
    let s: T = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| ((*p - *t) / *t).abs())
        .sum();
    Ok(T::lit(100.0) * s / T::from_usize_lossy(truths.len()))
}

/// Five-number summary plus mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single value.
    pub sem: f64,
}

/// Quantile by linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl DistributionSummary {
    pub fn of(values: &[f64]) -> Result<Self> {
        ensure!(!values.is_empty(), "cannot summarize an empty sample");
        ensure!(values.iter().all(|v| v.is_finite()), "sample has non-finite values");
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let mean = s.iter().sum::<f64>() / n as f64;
        let sem = if n > 1 {
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            var.sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(DistributionSummary {
            n,
            min: s[0],
            q1: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q3: quantile(&s, 0.75),
            max: s[n - 1],
            mean,
            sem,
        })
    }
}

/// Accuracy of one model on one reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub n_points: usize,
    pub mae_dbm: f64,
    /// `None` when some true value is exactly 0 dBm.
    pub mape_percent: Option<f64>,
    pub abs_errors: Vec<f64>,
    pub error_summary: DistributionSummary,
    pub mean_osnr_db: Option<f64>,
}

/// Predicts every reference row and compares against its simulated RSS.
pub fn evaluate(model: &dyn Predictor<f64>, reference: &Dataset) -> Result<EvalReport> {
    ensure!(!reference.is_empty(), "reference set is empty");
    ensure!(
        reference.arity() == model.arity(),
        "reference rows have {} features, model expects {}",
        reference.arity(),
        model.arity()
    );
    let pred = model.predict_rows(&reference.feature_matrix::<f64>())?;
    let truth = reference.targets::<f64>();
    let abs_errors: Vec<f64> = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).collect();
    Ok(EvalReport {
        model: model.label(),
        n_points: truth.len(),
        mae_dbm: mae(&pred, &truth)?,
        mape_percent: mape(&pred, &truth).ok(),
        error_summary: DistributionSummary::of(&abs_errors)?,
        abs_errors,
        mean_osnr_db: None,
    })
}
