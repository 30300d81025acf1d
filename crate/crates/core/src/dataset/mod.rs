//! Training and reference datasets of `(RSS, receiver position)` rows.
//!
//! Fixed-room datasets draw independent per-axis coordinates and take their
//! Cartesian product; variable-room datasets do the same per sampled room
//! footprint. Reference sets are independent uniform 3D draws. All random
//! values come from counter-based streams ([`rng`]), so generation order
//! and thread count do not affect the output.

pub mod io;
pub mod norm;
pub mod rng;

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{ensure, Result};
use crate::num::Real;
use crate::scene::{variable_scene, Point3, Scene, VARIABLE_ROOM_MAX, VARIABLE_ROOM_MIN};

pub use norm::NormStats;

/// Highest receiver position above the floor, in meters.
pub const MAX_RX_HEIGHT: f64 = 1.7;

/// Noisy powers are floored here (mW) before conversion back to dBm.
pub const NOISE_POWER_FLOOR_MW: f64 = 1e-12;

pub const FIXED_FEATURES: [&str; 3] = ["x", "y", "z"];
pub const VARIABLE_FEATURES: [&str; 5] = ["x", "y", "z", "lx", "ly"];

// Stream tags for the counter-based generators.
const TAG_X: u64 = 1;
const TAG_Y: u64 = 2;
const TAG_Z: u64 = 3;
const TAG_ROOM_LX: u64 = 4;
const TAG_ROOM_LY: u64 = 5;
const TAG_REF: u64 = 6;
const TAG_NOISE: u64 = 7;
const TAG_SPLIT: u64 = 8;
const TAG_SUBSAMPLE: u64 = 9;

/// One training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub rss_dbm: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Room length and width; present only in variable-room datasets.
    pub room: Option<(f64, f64)>,
}

impl ChannelSample {
    pub fn position(&self) -> Point3<f64> {
        Point3::new(self.x, self.y, self.z)
    }

    pub fn arity(&self) -> usize {
        if self.room.is_some() {
            5
        } else {
            3
        }
    }

    /// Appends the model input features (`x, y, z[, lx, ly]`) to `out`.
    pub fn push_features<T: Real>(&self, out: &mut Vec<T>) {
        out.extend([T::lit(self.x), T::lit(self.y), T::lit(self.z)]);
        if let Some((lx, ly)) = self.room {
            out.extend([T::lit(lx), T::lit(ly)]);
        }
    }

    pub fn features<T: Real>(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(5);
        self.push_features(&mut v);
        v
    }
}

/// How the rows of a dataset were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Fixed { per_axis: usize },
    Variable { per_xy: usize, per_z: usize, per_dim: usize },
    Reference { n: usize },
    /// Rows read from a file without a metadata sidecar.
    External,
}

/// Scene behind a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    Fixed { scene: Scene<f64> },
    Variable { led_count: usize },
    Unknown,
}

impl SceneSource {
    pub fn led_count(&self) -> Option<usize> {
        match self {
            SceneSource::Fixed { scene } => Some(scene.transmitters.len()),
            SceneSource::Variable { led_count } => Some(*led_count),
            SceneSource::Unknown => None,
        }
    }
}

/// Noise injection record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub noise_factor: f64,
    pub seed: u64,
    /// Standard deviation of the added noise in mW.
    pub sigma_mw: f64,
    /// Mean per-row OSNR in dB; `None` stands for +∞ (no noise).
    pub mean_osnr_db: Option<f64>,
}

/// Generation metadata; together with the crate version it replays the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: Generator,
    pub scene: SceneSource,
    pub seed: u64,
    pub patch_edge: f64,
    pub noise: Option<NoiseInfo>,
    /// Row-selection steps applied after generation, oldest first.
    pub derivation: Vec<String>,
}

impl DatasetMeta {
    pub fn external() -> Self {
        DatasetMeta {
            generator: Generator::External,
            scene: SceneSource::Unknown,
            seed: 0,
            patch_edge: 0.0,
            noise: None,
            derivation: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<ChannelSample>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(rows: Vec<ChannelSample>, meta: DatasetMeta) -> Result<Self> {
        let arity = rows.first().map_or(3, ChannelSample::arity);
        ensure!(
            rows.iter().all(|r| r.arity() == arity),
            "dataset rows have mixed arity"
        );
        ensure!(
            rows.iter().all(|r| r.rss_dbm.is_finite()),
            "dataset contains a non-finite RSS value"
        );
        let names: &[&str] = if arity == 5 {
            &VARIABLE_FEATURES
        } else {
            &FIXED_FEATURES
        };
        Ok(Dataset {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            rows,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_variable(&self) -> bool {
        self.arity() == 5
    }

    /// Row-major feature matrix.
    pub fn feature_matrix<T: Real>(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len() * self.arity());
        for r in &self.rows {
            r.push_features(&mut out);
        }
        out
    }

    pub fn targets<T: Real>(&self) -> Vec<T> {
        self.rows.iter().map(|r| T::lit(r.rss_dbm)).collect()
    }

    fn derived(&self, rows: Vec<ChannelSample>, step: String) -> Dataset {
        let mut meta = self.meta.clone();
        meta.derivation.push(step);
        Dataset {
            feature_names: self.feature_names.clone(),
            rows,
            meta,
        }
    }
}

fn check_patch_edge(patch_edge_m: f64) -> Result<()> {
    ensure!(
        patch_edge_m > 0.0 && patch_edge_m.is_finite(),
        "patch edge must be positive, got {patch_edge_m}"
    );
    Ok(())
}

fn rss_at(model: &ChannelModel<f64>, p: Point3<f64>) -> Result<f64> {
    model.rss_dbm(p)
}

/// Fixed-room training set: `per_axis` independent draws on each axis,
/// combined into `per_axis³` positions.
pub fn generate_fixed(
    scene: &Scene<f64>,
    per_axis: usize,
    patch_edge_m: f64,
    seed: u64,
) -> Result<Dataset> {
    ensure!(per_axis >= 1, "per-axis count must be at least 1");
    check_patch_edge(patch_edge_m)?;
    let model = ChannelModel::new(scene, patch_edge_m)?;
    let room = scene.room;
    let axis = |tag: u64, extent: f64| -> Vec<f64> {
        (0..per_axis as u64).map(|i| rng::unit(seed, tag, i, 0) * extent).collect()
    };
    let xs = axis(TAG_X, room.lx);
    let ys = axis(TAG_Y, room.ly);
    let zs = axis(TAG_Z, MAX_RX_HEIGHT.min(room.lz));
    let n = per_axis * per_axis * per_axis;
    let rows = (0..n)
        .into_par_iter()
        .map(|k| {
            let (ix, rest) = (k / (per_axis * per_axis), k % (per_axis * per_axis));
            let (iy, iz) = (rest / per_axis, rest % per_axis);
            let p = Point3::new(xs[ix], ys[iy], zs[iz]);
            Ok(ChannelSample {
                rss_dbm: rss_at(&model, p)?,
                x: p.x,
                y: p.y,
                z: p.z,
                room: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        rows,
        DatasetMeta {
            generator: Generator::Fixed { per_axis },
            scene: SceneSource::Fixed {
                scene: scene.clone(),
            },
            seed,
            patch_edge: patch_edge_m,
            noise: None,
            derivation: Vec::new(),
        },
    )
}

fn room_side(seed: u64, tag: u64, i: u64) -> f64 {
    VARIABLE_ROOM_MIN + rng::unit(seed, tag, i, 0) * (VARIABLE_ROOM_MAX - VARIABLE_ROOM_MIN)
}

/// Variable-room training set over `per_dim²` sampled footprints, each with
/// `per_xy² · per_z` positions.
pub fn generate_variable(
    led_count: usize,
    per_xy: usize,
    per_z: usize,
    per_dim: usize,
    patch_edge_m: f64,
    seed: u64,
) -> Result<Dataset> {
    ensure!(
        per_xy >= 1 && per_z >= 1 && per_dim >= 1,
        "per-xy, per-z and per-dim counts must be at least 1"
    );
    check_patch_edge(patch_edge_m)?;
    let lengths: Vec<f64> = (0..per_dim as u64).map(|j| room_side(seed, TAG_ROOM_LX, j)).collect();
    let widths: Vec<f64> = (0..per_dim as u64).map(|k| room_side(seed, TAG_ROOM_LY, k)).collect();
    let per_room = per_xy * per_xy * per_z;
    let mut rows = Vec::with_capacity(per_dim * per_dim * per_room);
    for (j, &lx) in lengths.iter().enumerate() {
        for (k, &ly) in widths.iter().enumerate() {
            let scene = variable_scene(lx, ly, led_count)?;
            let model = ChannelModel::new(&scene, patch_edge_m)?;
            let room_id = (j * per_dim + k) as u64;
            let draw = |tag: u64, count: usize| -> Vec<f64> {
                (0..count as u64).map(|i| rng::unit(seed, tag, room_id, i)).collect()
            };
            let xs: Vec<f64> = draw(TAG_X, per_xy).into_iter().map(|u| u * lx).collect();
            let ys: Vec<f64> = draw(TAG_Y, per_xy).into_iter().map(|u| u * ly).collect();
            let zs: Vec<f64> = draw(TAG_Z, per_z).into_iter().map(|u| u * MAX_RX_HEIGHT).collect();
            let chunk = (0..per_room)
                .into_par_iter()
                .map(|q| {
                    let (ix, rest) = (q / (per_xy * per_z), q % (per_xy * per_z));
                    let (iy, iz) = (rest / per_z, rest % per_z);
                    let p = Point3::new(xs[ix], ys[iy], zs[iz]);
                    Ok(ChannelSample {
                        rss_dbm: rss_at(&model, p)?,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                        room: Some((lx, ly)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(chunk);
        }
    }
    Dataset::new(
        rows,
        DatasetMeta {
            generator: Generator::Variable {
                per_xy,
                per_z,
                per_dim,
            },
            scene: SceneSource::Variable { led_count },
            seed,
            patch_edge: patch_edge_m,
            noise: None,
            derivation: Vec::new(),
        },
    )
}

/// Scene family for reference (ground-truth) sets.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceConfig {
    Fixed(Scene<f64>),
    Variable { led_count: usize },
}

/// `n` independent uniform positions with simulated RSS.
pub fn generate_reference(
    config: &ReferenceConfig,
    n: usize,
    patch_edge_m: f64,
    seed: u64,
) -> Result<Dataset> {
    ensure!(n >= 1, "reference set needs at least one row");
    check_patch_edge(patch_edge_m)?;
    let u = |i: usize, c: u64| rng::unit(seed, TAG_REF, i as u64, c);
    let (rows, scene) = match config {
        ReferenceConfig::Fixed(scene) => {
            let model = ChannelModel::new(scene, patch_edge_m)?;
            let room = scene.room;
            let rows = (0..n)
                .into_par_iter()
                .map(|i| {
                    let p = Point3::new(
                        u(i, 0) * room.lx,
                        u(i, 1) * room.ly,
                        u(i, 2) * MAX_RX_HEIGHT.min(room.lz),
                    );
                    Ok(ChannelSample {
                        rss_dbm: rss_at(&model, p)?,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                        room: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (rows, SceneSource::Fixed { scene: scene.clone() })
        }
        &ReferenceConfig::Variable { led_count } => {
            let span = VARIABLE_ROOM_MAX - VARIABLE_ROOM_MIN;
            let rows = (0..n)
                .into_par_iter()
                .map(|i| {
                    let lx = VARIABLE_ROOM_MIN + u(i, 3) * span;
                    let ly = VARIABLE_ROOM_MIN + u(i, 4) * span;
                    let scene = variable_scene(lx, ly, led_count)?;
                    let model = ChannelModel::new(&scene, patch_edge_m)?;
                    let p = Point3::new(u(i, 0) * lx, u(i, 1) * ly, u(i, 2) * MAX_RX_HEIGHT);
                    Ok(ChannelSample {
                        rss_dbm: rss_at(&model, p)?,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                        room: Some((lx, ly)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (rows, SceneSource::Variable { led_count })
        }
    };
    Dataset::new(
        rows,
        DatasetMeta {
            generator: Generator::Reference { n },
            scene,
            seed,
            patch_edge: patch_edge_m,
            noise: None,
            derivation: Vec::new(),
        },
    )
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Adds zero-mean Gaussian noise in the linear power domain.
///
/// `σ = noise_factor · std(P)` over the clean powers in mW. Returns the
/// noisy dataset and the mean per-row OSNR `10·log₁₀(P_i / σ)` in dB, which
/// is `+∞` when `noise_factor` is zero.
pub fn add_noise(ds: &Dataset, noise_factor: f64, seed: u64) -> Result<(Dataset, f64)> {
    ensure!(
        noise_factor >= 0.0 && noise_factor.is_finite(),
        "noise factor must be non-negative, got {noise_factor}"
    );
    ensure!(!ds.is_empty(), "cannot add noise to an empty dataset");
    let clean: Vec<f64> = ds.rows.iter().map(|r| dbm_to_mw(r.rss_dbm)).collect();
    let sigma = noise_factor * population_std(&clean);
    let mut out = ds.clone();
    if sigma == 0.0 {
        out.meta.noise = Some(NoiseInfo {
            noise_factor,
            seed,
            sigma_mw: 0.0,
            mean_osnr_db: None,
        });
        return Ok((out, f64::INFINITY));
    }
    out.rows
        .par_iter_mut()
        .zip(clean.par_iter())
        .enumerate()
        .for_each(|(i, (row, &p))| {
            let mut r = rng::stream(seed, TAG_NOISE, i as u64);
            let g: f64 = StandardNormal.sample(&mut r);
            let noisy = (p + sigma * g).max(NOISE_POWER_FLOOR_MW);
            row.rss_dbm = 10.0 * noisy.log10();
        });
    let osnr = mean_osnr_db(&clean, sigma);
    out.meta.noise = Some(NoiseInfo {
        noise_factor,
        seed,
        sigma_mw: sigma,
        mean_osnr_db: Some(osnr),
    });
    Ok((out, osnr))
}

/// Mean of `10·log₁₀(P_i / σ)` over clean powers in mW.
pub fn mean_osnr_db(clean_mw: &[f64], sigma_mw: f64) -> f64 {
    if sigma_mw == 0.0 {
        return f64::INFINITY;
    }
    clean_mw.iter().map(|p| 10.0 * (p / sigma_mw).log10()).sum::<f64>() / clean_mw.len() as f64
}

/// Mean OSNR of a dataset's clean rows against a given noise level.
pub fn dataset_osnr_db(ds: &Dataset, sigma_mw: f64) -> f64 {
    let clean: Vec<f64> = ds.rows.iter().map(|r| dbm_to_mw(r.rss_dbm)).collect();
    mean_osnr_db(&clean, sigma_mw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSets {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Sizes of a 60/20/20 split: floors for train and validation, the rest to test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 3 / 5;
    let validation = n / 5;
    (train, validation, n - train - validation)
}

/// Seeded shuffle, then a 60/20/20 partition.
pub fn split(ds: &Dataset, seed: u64) -> Result<SplitSets> {
    ensure!(
        ds.len() >= 5,
        "split needs at least 5 rows, got {}",
        ds.len()
    );
    let idx = split_indices(ds.len(), seed);
    let (a, b, _) = split_sizes(ds.len());
    let pick = |ix: &[usize]| ix.iter().map(|&i| ds.rows[i]).collect::<Vec<_>>();
    Ok(SplitSets {
        train: ds.derived(pick(&idx[..a]), format!("split(seed={seed}):train")),
        validation: ds.derived(pick(&idx[a..a + b]), format!("split(seed={seed}):validation")),
        test: ds.derived(pick(&idx[a + b..]), format!("split(seed={seed}):test")),
    })
}

/// The shuffled index order used by [`split`].
pub fn split_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, TAG_SPLIT, 0));
    idx
}

/// Uniform sample of `n` rows without replacement.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    ensure!(
        n >= 1 && n <= ds.len(),
        "subsample size {n} must lie in [1, {}]",
        ds.len()
    );
    let mut r = rng::stream(seed, TAG_SUBSAMPLE, 0);
    let rows = index::sample(&mut r, ds.len(), n)
        .into_iter()
        .map(|i| ds.rows[i])
        .collect();
    Ok(ds.derived(rows, format!("subsample(n={n}, seed={seed})")))
}
