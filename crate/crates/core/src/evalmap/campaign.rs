//! Repeated-training experiments over a grid of settings.
//!
//! A campaign generates one training pool and one reference set, then for
//! every experiment runs the cross product of models, train sizes, epochs,
//! batch sizes and noise factors, each repeated with derived seeds. All
//! primary outputs depend only on the spec; wall-clock times go to separate
//! `*_timing.csv` files.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::DEFAULT_PATCH_EDGE;
use crate::dataset::io::fmt_float;
use crate::dataset::{add_noise, generate_fixed, generate_reference, generate_variable, rng, Dataset, ReferenceConfig};
use crate::error::{ensure, Result};
use crate::forest::ForestParams;
use crate::scene::{preset_scene, Preset};

use super::map::{predicted_profile, simulated_profile};
use super::model::{fit_splits, prepare_splits, ModelKind, Predictor, TrainSpec};
use super::{evaluate, DistributionSummary};

/// Where the training pool comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolSpec {
    Fixed { preset: Preset, leds: usize, per_axis: usize },
    Variable { leds: usize, per_xy: usize, per_z: usize, per_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub z: f64,
    pub n_points: usize,
}

fn default_epochs() -> Vec<usize> {
    vec![250]
}
fn default_batch_sizes() -> Vec<usize> {
    vec![128]
}
fn default_noise() -> Vec<f64> {
    vec![0.0]
}
fn default_repetitions() -> usize {
    10
}
fn default_patch_edge() -> f64 {
    DEFAULT_PATCH_EDGE
}
fn default_reference_points() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Also the output file stem.
    pub name: String,
    pub models: Vec<ModelKind>,
    pub train_sizes: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: Vec<usize>,
    #[serde(default = "default_batch_sizes")]
    pub batch_sizes: Vec<usize>,
    #[serde(default = "default_noise")]
    pub noise_factors: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub forest: ForestParams,
    /// Half-diagonal profile to record per cell (fixed-room pools only).
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub seed: u64,
    pub pool: PoolSpec,
    #[serde(default = "default_patch_edge")]
    pub patch_edge: f64,
    #[serde(default = "default_reference_points")]
    pub reference_points: usize,
    pub experiments: Vec<ExperimentSpec>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            !self.name.is_empty()
                && self
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
            "experiment name '{}' must be non-empty and use only letters, digits, '_' or '-'",
            self.name
        );
        let e = &self.name;
        ensure!(!self.models.is_empty(), "experiment {e}: no models");
        ensure!(!self.train_sizes.is_empty(), "experiment {e}: no train sizes");
        ensure!(!self.epochs.is_empty(), "experiment {e}: no epoch counts");
        ensure!(!self.batch_sizes.is_empty(), "experiment {e}: no batch sizes");
        ensure!(!self.noise_factors.is_empty(), "experiment {e}: no noise factors");
        ensure!(self.repetitions >= 1, "experiment {e}: repetitions must be at least 1");
        ensure!(
            self.train_sizes.iter().all(|&n| n >= 5),
            "experiment {e}: train sizes must be at least 5"
        );
        ensure!(
            self.batch_sizes.iter().all(|&b| b >= 1),
            "experiment {e}: batch sizes must be at least 1"
        );
        ensure!(
            self.noise_factors.iter().all(|&f| f >= 0.0 && f.is_finite()),
            "experiment {e}: noise factors must be finite and non-negative"
        );
        if let Some(p) = self.profile {
            ensure!(p.n_points >= 2, "experiment {e}: profile needs at least 2 points");
        }
        self.forest.tree.validate()
    }
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.experiments.is_empty(), "campaign has no experiments");
        ensure!(self.reference_points >= 1, "reference set needs at least one point");
        ensure!(self.patch_edge > 0.0, "patch edge must be positive");
        let mut names = HashSet::new();
        for e in &self.experiments {
            e.validate()?;
            ensure!(names.insert(&e.name), "duplicate experiment name '{}'", e.name);
            if e.profile.is_some() {
                ensure!(
                    matches!(self.pool, PoolSpec::Fixed { .. }),
                    "experiment {}: profiles need a fixed-room pool",
                    e.name
                );
            }
        }
        match self.pool {
            PoolSpec::Fixed { leds, per_axis, .. } => {
                ensure!(leds >= 1 && per_axis >= 1, "pool needs at least one LED and one point per axis")
            }
            PoolSpec::Variable { leds, per_xy, per_z, per_dim } => ensure!(
                leds >= 1 && per_xy >= 1 && per_z >= 1 && per_dim >= 1,
                "pool counts must be at least 1"
            ),
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CampaignSpec = serde_json::from_str(text)
            .map_err(|e| crate::error::Error::MalformedFile(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// One (model, size, epochs, batch, noise) setting after all repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub experiment: String,
    pub model: ModelKind,
    pub train_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub noise_factor: f64,
    pub seeds: Vec<u64>,
    pub mae_dbm: Vec<f64>,
    pub mape_percent: Vec<Option<f64>>,
    pub mae_summary: DistributionSummary,
    /// `None` for noiseless cells.
    pub mean_osnr_db: Option<f64>,
    #[serde(skip)]
    pub train_seconds: Vec<f64>,
    /// `(x, simulated, mean predicted, mean |error|)` along the half-diagonal.
    pub profile: Option<Vec<(f64, f64, f64, f64)>>,
}

/// Everything a campaign run needs besides the experiment itself.
pub struct CampaignData<'a> {
    pub pool: &'a Dataset,
    pub reference: &'a Dataset,
    /// Scene for profiles; `None` for variable-room pools.
    pub scene: Option<&'a crate::scene::Scene<f64>>,
    pub patch_edge: f64,
    pub seed: u64,
}

/// Seed of repetition `rep` of experiment `name`. Shared by every cell of
/// the experiment, so models are compared on identical subsamples.
pub fn repetition_seed(master: u64, name: &str, rep: usize) -> u64 {
    rng::derive(rng::sub_seed(master, name), 0, rep as u64, 0)
}

/// Runs every cell of one experiment. `on_cell` sees each finished cell.
pub fn run_experiment(
    exp: &ExperimentSpec,
    data: &CampaignData<'_>,
    mut on_cell: impl FnMut(&CellResult),
) -> Result<Vec<CellResult>> {
    exp.validate()?;
    for &n in &exp.train_sizes {
        ensure!(
            n <= data.pool.len(),
            "experiment {}: train size {n} exceeds the pool of {}",
            exp.name,
            data.pool.len()
        );
    }
    let simulated = match (exp.profile, data.scene) {
        (Some(p), Some(scene)) => Some(simulated_profile(scene, p.z, p.n_points, data.patch_edge)?),
        (Some(_), None) => {
            return Err(crate::error::Error::invalid("profiles need a fixed-room scene"));
        }
        _ => None,
    };
    let mut cells = Vec::new();
    for &noise in &exp.noise_factors {
        let noisy: Vec<(Dataset, f64)> = (0..exp.repetitions)
            .map(|rep| {
                let seed = rng::sub_seed(repetition_seed(data.seed, &exp.name, rep), "noise");
                add_noise(data.pool, noise, seed)
            })
            .collect::<Result<_>>()?;
        for &model in &exp.models {
            for &train_size in &exp.train_sizes {
                for &epochs in &exp.epochs {
                    for &batch_size in &exp.batch_sizes {
                        let mut cell = CellResult {
                            experiment: exp.name.clone(),
                            model,
                            train_size,
                            epochs,
                            batch_size,
                            noise_factor: noise,
                            seeds: Vec::new(),
                            mae_dbm: Vec::new(),
                            mape_percent: Vec::new(),
                            mae_summary: DistributionSummary::of(&[0.0])?,
                            mean_osnr_db: None,
                            train_seconds: Vec::new(),
                            profile: None,
                        };
                        let mut osnr = Vec::new();
                        let mut prof_sum: Option<Vec<(f64, f64)>> = None;
                        for (rep, (pool, rep_osnr)) in noisy.iter().enumerate() {
                            let seed = repetition_seed(data.seed, &exp.name, rep);
                            let spec = TrainSpec {
                                model,
                                train_size: Some(train_size),
                                epochs,
                                batch_size,
                                seed,
                                forest: exp.forest,
                            };
                            let splits = prepare_splits(pool, spec.train_size, seed)?;
                            let t0 = Instant::now();
                            let fitted = fit_splits(&spec, &splits)?;
                            cell.train_seconds.push(t0.elapsed().as_secs_f64());
                            let report = evaluate(&fitted, data.reference)?;
                            cell.seeds.push(seed);
                            cell.mae_dbm.push(report.mae_dbm);
                            cell.mape_percent.push(report.mape_percent);
                            if rep_osnr.is_finite() {
                                osnr.push(*rep_osnr);
                            }
                            if let (Some(p), Some(scene), Some(sim)) = (exp.profile, data.scene, &simulated) {
                                let pred = predicted_profile(&fitted as &dyn Predictor<f64>, scene, p.z, p.n_points)?;
                                let acc = prof_sum.get_or_insert_with(|| vec![(0.0, 0.0); sim.len()]);
                                for ((a, (_, y)), (_, s)) in acc.iter_mut().zip(&pred).zip(sim) {
                                    a.0 += y;
                                    a.1 += (y - s).abs();
                                }
                            }
                        }
                        let reps = exp.repetitions as f64;
                        cell.mae_summary = DistributionSummary::of(&cell.mae_dbm)?;
                        if !osnr.is_empty() {
                            cell.mean_osnr_db = Some(osnr.iter().sum::<f64>() / osnr.len() as f64);
                        }
                        if let (Some(acc), Some(sim)) = (prof_sum, &simulated) {
                            cell.profile = Some(
                                sim.iter()
                                    .zip(acc)
                                    .map(|(&(x, s), (p, e))| (x, s, p / reps, e / reps))
                                    .collect(),
                            );
                        }
                        on_cell(&cell);
                        cells.push(cell);
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn cell_key(c: &CellResult) -> String {
    format!(
        "{},{},{},{},{}",
        c.model,
        c.train_size,
        c.epochs,
        c.batch_size,
        fmt_float(c.noise_factor)
    )
}

const KEY_HEADER: &str = "model,train_size,epochs,batch_size,noise_factor";

/// Writes `<name>.csv`, `<name>_summary.csv`, `<name>_timing.csv` and, when
/// profiles were recorded, `<name>_profile.csv`.
pub fn write_experiment(name: &str, cells: &[CellResult], out_dir: &Path) -> Result<()> {
    let mut runs = format!("{KEY_HEADER},repetition,seed,mae_dbm,mape_percent\n");
    let mut summary = format!(
        "{KEY_HEADER},repetitions,mean_mae_dbm,min,q1,median,q3,max,sem,mean_osnr_db\n"
    );
    let mut timing = format!("{KEY_HEADER},repetition,train_seconds\n");
    let mut profile = format!("{KEY_HEADER},x,simulated_rss_dbm,mean_predicted_rss_dbm,mean_abs_error_db\n");
    let mut any_profile = false;
    for c in cells {
        let key = cell_key(c);
        for (rep, ((seed, mae), mape)) in c.seeds.iter().zip(&c.mae_dbm).zip(&c.mape_percent).enumerate() {
            let _ = writeln!(runs, "{key},{rep},{seed},{},{}", fmt_float(*mae), opt(*mape));
        }
        let s = &c.mae_summary;
        let _ = writeln!(
            summary,
            "{key},{},{},{},{},{},{},{},{},{}",
            s.n,
            fmt_float(s.mean),
            fmt_float(s.min),
            fmt_float(s.q1),
            fmt_float(s.median),
            fmt_float(s.q3),
            fmt_float(s.max),
            fmt_float(s.sem),
            opt(c.mean_osnr_db)
        );
        for (rep, t) in c.train_seconds.iter().enumerate() {
            let _ = writeln!(timing, "{key},{rep},{t}");
        }
        if let Some(p) = &c.profile {
            any_profile = true;
            for (x, s, m, e) in p {
                let _ = writeln!(
                    profile,
                    "{key},{},{},{},{}",
                    fmt_float(*x),
                    fmt_float(*s),
                    fmt_float(*m),
                    fmt_float(*e)
                );
            }
        }
    }
    fs::write(out_dir.join(format!("{name}.csv")), runs)?;
    fs::write(out_dir.join(format!("{name}_summary.csv")), summary)?;
    fs::write(out_dir.join(format!("{name}_timing.csv")), timing)?;
    if any_profile {
        fs::write(out_dir.join(format!("{name}_profile.csv")), profile)?;
    }
    Ok(())
}

/// Outcome of [`run_campaign`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub spec: CampaignSpec,
    pub pool_rows: usize,
    pub reference_rows: usize,
    pub cells: Vec<CellResult>,
}

/// Builds the pool, the reference set and the scene (fixed pools only).
pub fn campaign_inputs(spec: &CampaignSpec) -> Result<(Dataset, Dataset, Option<crate::scene::Scene<f64>>)> {
    let pool_seed = rng::sub_seed(spec.seed, "pool");
    let ref_seed = rng::sub_seed(spec.seed, "reference");
    Ok(match spec.pool {
        PoolSpec::Fixed { preset, leds, per_axis } => {
            let scene = preset_scene(preset, leds)?;
            let pool = generate_fixed(&scene, per_axis, spec.patch_edge, pool_seed)?;
            let reference = generate_reference(
                &ReferenceConfig::Fixed(scene.clone()),
                spec.reference_points,
                spec.patch_edge,
                ref_seed,
            )?;
            (pool, reference, Some(scene))
        }
        PoolSpec::Variable { leds, per_xy, per_z, per_dim } => {
            let pool = generate_variable(leds, per_xy, per_z, per_dim, spec.patch_edge, pool_seed)?;
            let reference = generate_reference(
                &ReferenceConfig::Variable { led_count: leds },
                spec.reference_points,
                spec.patch_edge,
                ref_seed,
            )?;
            (pool, reference, None)
        }
    })
}

/// Runs every experiment and writes its CSV files plus `campaign.json` into
/// `out_dir`.
pub fn run_campaign(
    spec: &CampaignSpec,
    out_dir: &Path,
    mut on_cell: impl FnMut(&CellResult),
) -> Result<CampaignResult> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let (pool, reference, scene) = campaign_inputs(spec)?;
    let data = CampaignData {
        pool: &pool,
        reference: &reference,
        scene: scene.as_ref(),
        patch_edge: spec.patch_edge,
        seed: spec.seed,
    };
    let mut all = Vec::new();
    for exp in &spec.experiments {
        let cells = run_experiment(exp, &data, &mut on_cell)?;
        write_experiment(&exp.name, &cells, out_dir)?;
        all.extend(cells);
    }
    let result = CampaignResult {
        spec: spec.clone(),
        pool_rows: pool.len(),
        reference_rows: reference.len(),
        cells: all,
    };
    fs::write(
        out_dir.join("campaign.json"),
        serde_json::to_string_pretty(&result).expect("campaign result serializes") + "\n",
    )?;
    Ok(result)
}
