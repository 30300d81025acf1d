//! Model kinds, a uniform training entry point and a prediction trait.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{rng, split, subsample, Dataset, SplitSets};
use crate::error::{ensure, Error, Result};
use crate::forest::{self, Forest, ForestMode, ForestParams};
use crate::mlp::io::parse_document;
use crate::mlp::{self, Architecture, MlpConfig, MlpModel};
use crate::num::Real;

/// Anything that maps row-major raw features to RSS predictions.
pub trait Predictor<T: Real>: Sync {
    fn arity(&self) -> usize;
    fn predict_rows(&self, features: &[T]) -> Result<Vec<T>>;
    fn predict_one(&self, features: &[T]) -> Result<T>;
    fn label(&self) -> String;
}

impl<T: Real> Predictor<T> for MlpModel<T> {
    fn arity(&self) -> usize {
        self.input_dim()
    }
    fn predict_rows(&self, features: &[T]) -> Result<Vec<T>> {
        self.predict_batch(features)
    }
    fn predict_one(&self, features: &[T]) -> Result<T> {
        self.predict(features)
    }
    fn label(&self) -> String {
        let widths: Vec<String> = self.config.hidden.iter().map(usize::to_string).collect();
        format!("mlp{}", widths.join("x"))
    }
}

impl<T: Real> Predictor<T> for Forest<T> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn predict_rows(&self, features: &[T]) -> Result<Vec<T>> {
        self.predict_batch(features)
    }
    fn predict_one(&self, features: &[T]) -> Result<T> {
        self.predict(features)
    }
    fn label(&self) -> String {
        self.mode.cli_name().to_string()
    }
}

/// Every trainable model, by command-line name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Mlp(Architecture),
    Tree(ForestMode),
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Mlp(Architecture::Mlp32x128),
        ModelKind::Mlp(Architecture::Mlp64x256),
        ModelKind::Tree(ForestMode::Single),
        ModelKind::Tree(ForestMode::ExtraTrees),
        ModelKind::Tree(ForestMode::AdaboostR2),
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp(a) => a.name(),
            ModelKind::Tree(m) => m.cli_name(),
        }
    }

    pub fn is_mlp(self) -> bool {
        matches!(self, ModelKind::Mlp(_))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown model '{s}' (expected mlp32x128, mlp64x256, dt, xt or adaboost)"
                ))
            })
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> String {
        k.name().to_string()
    }
}

/// One training run: which model, on how many pool rows, with which knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub model: ModelKind,
    /// Rows drawn from the pool before the 60/20/20 split; `None` uses the
    /// whole pool.
    pub train_size: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub forest: ForestParams,
}

impl TrainSpec {
    pub fn new(model: ModelKind) -> Self {
        TrainSpec {
            model,
            train_size: Some(12_500),
            epochs: 250,
            batch_size: 128,
            seed: 0,
            forest: ForestParams::default(),
        }
    }

    pub fn mlp_config(&self, arch: Architecture, input_dim: usize) -> MlpConfig<f64> {
        let mut c = MlpConfig::preset(arch, input_dim);
        c.epochs = self.epochs;
        c.batch_size = self.batch_size;
        c.seed = rng::sub_seed(self.seed, "init");
        c
    }
}

/// Subsamples the pool and splits it the way [`train_model`] does.
pub fn prepare_splits(pool: &Dataset, train_size: Option<usize>, seed: u64) -> Result<SplitSets> {
    let picked = match train_size {
        Some(n) if n < pool.len() => subsample(pool, n, rng::sub_seed(seed, "subsample"))?,
        Some(n) => {
            ensure!(
                n == pool.len(),
                "train size {n} exceeds the {} available rows",
                pool.len()
            );
            pool.clone()
        }
        None => pool.clone(),
    };
    split(&picked, rng::sub_seed(seed, "split"))
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mlp(MlpModel<f64>),
    Forest(Forest<f64>),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Mlp(m) => {
                let arch = if m.config.hidden == Architecture::Mlp64x256.hidden() {
                    Architecture::Mlp64x256
                } else {
                    Architecture::Mlp32x128
                };
                ModelKind::Mlp(arch)
            }
            TrainedModel::Forest(f) => ModelKind::Tree(f.mode),
        }
    }

    pub fn predictor(&self) -> &dyn Predictor<f64> {
        match self {
            TrainedModel::Mlp(m) => m,
            TrainedModel::Forest(f) => f,
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            TrainedModel::Mlp(m) => m.to_json(),
            TrainedModel::Forest(f) => f.to_json(),
        }
    }

    /// Reads either model file format, dispatching on its `kind` field.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc = parse_document(text)?;
        match doc.get("kind").and_then(|k| k.as_str()) {
            Some(mlp::io::MODEL_KIND) => Ok(TrainedModel::Mlp(MlpModel::from_json(text)?)),
            Some(forest::MODEL_KIND) => Ok(TrainedModel::Forest(Forest::from_json(text)?)),
            _ => Err(Error::MalformedFile("unrecognized model kind".into())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl Predictor<f64> for TrainedModel {
    fn arity(&self) -> usize {
        self.predictor().arity()
    }
    fn predict_rows(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.predictor().predict_rows(features)
    }
    fn predict_one(&self, features: &[f64]) -> Result<f64> {
        self.predictor().predict_one(features)
    }
    fn label(&self) -> String {
        self.predictor().label()
    }
}

/// Fits a model on splits already prepared by [`prepare_splits`].
pub fn fit_splits(spec: &TrainSpec, splits: &SplitSets) -> Result<TrainedModel> {
    match spec.model {
        ModelKind::Mlp(arch) => {
            let cfg = spec.mlp_config(arch, splits.train.arity());
            Ok(TrainedModel::Mlp(mlp::train(&cfg, splits)?))
        }
        ModelKind::Tree(mode) => {
            let params = ForestParams {
                seed: rng::sub_seed(spec.seed, "forest"),
                ..spec.forest
            };
            Ok(TrainedModel::Forest(forest::fit_dataset(mode, &splits.train, params)?))
        }
    }
}

/// Subsample, split and fit. Trees train on the training split only, like
/// the MLP.
pub fn train_model(spec: &TrainSpec, pool: &Dataset) -> Result<(TrainedModel, SplitSets)> {
    let splits = prepare_splits(pool, spec.train_size, spec.seed)?;
    let model = fit_splits(spec, &splits)?;
    Ok((model, splits))
}
