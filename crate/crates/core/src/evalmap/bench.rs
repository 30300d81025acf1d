//! Wall-clock training and inference timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ensure, Result};

use super::model::{fit_splits, prepare_splits, Predictor, TrainSpec};

/// Minimum number of single-point predictions timed per repetition.
pub const MIN_PREDICT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub model: String,
    pub train_rows: usize,
    pub repetitions: usize,
    /// Mean wall-clock seconds per training run.
    pub train_seconds: f64,
    pub train_seconds_each: Vec<f64>,
    /// Mean microseconds per single-location prediction.
    pub predict_us_per_sample: f64,
    pub predict_samples: usize,
    pub hardware: String,
}

/// Free-text description of the machine the timings came from.
pub fn hardware_note() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".to_string());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {threads} hardware threads, {} worker threads; {}-{}",
        rayon::current_num_threads(),
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Times `repetitions` training runs (seed offset by the repetition index)
/// and, per run, at least [`MIN_PREDICT_SAMPLES`] single-point predictions
/// cycling over the pool rows.
pub fn benchmark(spec: &TrainSpec, pool: &Dataset, repetitions: usize) -> Result<TimingReport> {
    ensure!(repetitions >= 1, "repetitions must be at least 1");
    ensure!(!pool.is_empty(), "benchmark data is empty");
    let d = pool.arity();
    let feats = pool.feature_matrix::<f64>();
    let n_rows = pool.len();
    let mut train_each = Vec::with_capacity(repetitions);
    let mut predict_total = 0.0;
    let mut train_rows = 0;
    let mut label = spec.model.name().to_string();
    for rep in 0..repetitions {
        let run = TrainSpec {
            seed: spec.seed.wrapping_add(rep as u64),
            ..spec.clone()
        };
        let splits = prepare_splits(pool, run.train_size, run.seed)?;
        train_rows = splits.train.len();
        let t0 = Instant::now();
        let model = fit_splits(&run, &splits)?;
        train_each.push(t0.elapsed().as_secs_f64());
        label = model.label();

        let t0 = Instant::now();
        let mut sink = 0.0;
        for k in 0..MIN_PREDICT_SAMPLES {
            let r = k % n_rows;
            sink += model.predict_one(&feats[r * d..(r + 1) * d])?;
        }
        predict_total += t0.elapsed().as_secs_f64();
        std::hint::black_box(sink);
    }
    let samples = MIN_PREDICT_SAMPLES * repetitions;
    Ok(TimingReport {
        model: label,
        train_rows,
        repetitions,
        train_seconds: train_each.iter().sum::<f64>() / repetitions as f64,
        train_seconds_each: train_each,
        predict_us_per_sample: predict_total * 1e6 / samples as f64,
        predict_samples: samples,
        hardware: hardware_note(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_fixed;
    use crate::evalmap::ModelKind;
    use crate::forest::ForestMode;
    use crate::scene::{preset_scene, Preset};

    #[test]
    fn report_has_positive_times() {
        let pool = generate_fixed(&preset_scene(Preset::Small, 1).unwrap(), 5, 0.5, 1).unwrap();
        let mut spec = TrainSpec::new(ModelKind::Tree(ForestMode::ExtraTrees));
        spec.train_size = Some(100);
        spec.forest.n_trees = 3;
        let r = benchmark(&spec, &pool, 2).unwrap();
        assert_eq!(r.repetitions, 2);
        assert_eq!(r.train_seconds_each.len(), 2);
        assert!(r.train_seconds > 0.0 && r.predict_us_per_sample > 0.0);
        assert_eq!(r.predict_samples, 2 * MIN_PREDICT_SAMPLES);
        assert!(!r.hardware.is_empty());
        assert!(benchmark(&spec, &pool, 0).is_err());
    }
}
