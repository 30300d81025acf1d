//! Tree-based regressors: a single CART tree, Extra Trees, and AdaBoost.R2
//! with Extra Trees as the base learner.
//!
//! Trees see raw features; axis-aligned splits do not care about scale.

pub mod tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{rng, Dataset};
use crate::error::{ensure, Error, Result};
use crate::mlp::io::{check_version, parse_document};
use crate::num::Real;

pub use tree::{fit_cart, fit_random_tree, Rows, Tree, TreeNode, TreeParams, LEAF};

pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_KIND: &str = "forest";

const TAG_TREE: u64 = 0x21;
const TAG_BOOST_SAMPLE: u64 = 0x22;
const TAG_BOOST_BASE: u64 = 0x23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    Single,
    ExtraTrees,
    AdaboostR2,
}

impl ForestMode {
    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            ForestMode::Single => "dt",
            ForestMode::ExtraTrees => "xt",
            ForestMode::AdaboostR2 => "adaboost",
        }
    }
}

impl fmt::Display for ForestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ForestMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" | "single" => Ok(ForestMode::Single),
            "xt" | "extra_trees" => Ok(ForestMode::ExtraTrees),
            "adaboost" | "adaboost_r2" => Ok(ForestMode::AdaboostR2),
            other => Err(Error::invalid(format!("unknown tree model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    /// Trees per Extra Trees ensemble.
    pub n_trees: usize,
    /// Boosting rounds (AdaBoost only).
    pub n_estimators: usize,
    /// Trees in each boosted Extra Trees base learner.
    pub base_trees: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree: TreeParams::default(),
            n_trees: 100,
            n_estimators: 50,
            base_trees: 10,
            seed: 0,
        }
    }
}

/// A fitted tree model.
///
/// Each member is a group of trees whose predictions are averaged. Single
/// and Extra Trees models have one member; AdaBoost has one per round and
/// combines them by weighted median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Forest<T: Real> {
    pub mode: ForestMode,
    pub params: ForestParams,
    pub arity: usize,
    pub members: Vec<Vec<Tree<T>>>,
    /// `ln(1/β)` per boosting round; all ones otherwise.
    pub member_weights: Vec<T>,
}

/// Weighted median: the smallest value whose cumulative weight (in sorted
/// order) reaches half the total.
pub fn weighted_median<T: Real>(values: &[T], weights: &[T]) -> Result<T> {
    ensure!(!values.is_empty(), "weighted median of nothing");
    ensure!(values.len() == weights.len(), "values and weights differ in length");
    ensure!(
        weights.iter().all(|w| *w >= T::zero()) && weights.iter().any(|w| *w > T::zero()),
        "weights must be non-negative with a positive total"
    );
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_order(&values[b]).then(a.cmp(&b)));
    let total: T = weights.iter().copied().sum();
    let half = total * T::half();
    let mut acc = T::zero();
    for &i in &order {
        acc += weights[i];
        if acc >= half {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().expect("non-empty")])
}

fn mean_prediction<T: Real>(trees: &[Tree<T>], x: &[T]) -> T {
    trees.iter().map(|t| t.predict(x)).sum::<T>() / T::from_usize_lossy(trees.len())
}

fn extra_trees_group<T: Real>(rows: Rows<'_, T>, n_trees: usize, params: TreeParams, seed: u64) -> Vec<Tree<T>> {
    (0..n_trees)
        .into_par_iter()
        .map(|i| tree::fit_tree(rows, params, tree::Splitter::Random(rng::stream(seed, TAG_TREE, i as u64))))
        .collect()
}

impl<T: Real> Forest<T> {
    pub fn n_trees(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Per-member predictions for one feature vector.
    pub fn member_predictions(&self, x: &[T]) -> Vec<T> {
        self.members.iter().map(|m| mean_prediction(m, x)).collect()
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        ensure!(
            x.len() == self.arity,
            "expected {} features, got {}",
            self.arity,
            x.len()
        );
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[T]) -> T {
        match self.mode {
            ForestMode::Single | ForestMode::ExtraTrees => mean_prediction(&self.members[0], x),
            ForestMode::AdaboostR2 => {
                weighted_median(&self.member_predictions(x), &self.member_weights)
                    .expect("member weights validated at construction")
            }
        }
    }

    /// Row-major batch form of [`Forest::predict`].
    pub fn predict_batch(&self, features: &[T]) -> Result<Vec<T>> {
        ensure!(
            !features.is_empty() && features.len() % self.arity == 0,
            "expected a multiple of {} features, got {}",
            self.arity,
            features.len()
        );
        Ok(features
            .par_chunks(self.arity)
            .map(|x| self.predict_unchecked(x))
            .collect())
    }

    fn check(&self) -> Result<()> {
        ensure!(self.arity > 0, "forest arity must be positive");
        ensure!(!self.members.is_empty(), "forest has no members");
        ensure!(
            self.members.len() == self.member_weights.len(),
            "member weights do not match members"
        );
        ensure!(
            self.member_weights.iter().all(|w| w.is_finite() && *w >= T::zero())
                && self.member_weights.iter().any(|w| *w > T::zero()),
            "member weights must be non-negative with a positive total"
        );
        if self.mode != ForestMode::AdaboostR2 {
            ensure!(self.members.len() == 1, "only boosted forests have several members");
        }
        for t in self.members.iter().flatten() {
            t.check()?;
            ensure!(
                t.max_feature().map_or(true, |f| f < self.arity),
                "tree splits on a feature beyond the arity"
            );
        }
        ensure!(self.members.iter().all(|m| !m.is_empty()), "empty member");
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut doc = serde_json::to_value(self).expect("forest serializes");
        let obj = doc.as_object_mut().expect("struct serializes to an object");
        obj.insert("format_version".into(), FORMAT_VERSION.into());
        obj.insert("kind".into(), MODEL_KIND.into());
        doc.to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc = parse_document(text)?;
        check_version(&doc, FORMAT_VERSION)?;
        if doc.get("kind").and_then(|k| k.as_str()) != Some(MODEL_KIND) {
            return Err(Error::MalformedFile("not a forest model file".into()));
        }
        let forest: Forest<T> =
            serde_json::from_value(doc).map_err(|e| Error::MalformedFile(e.to_string()))?;
        forest.check().map_err(|e| Error::MalformedFile(e.to_string()))?;
        Ok(forest)
    }
}

/// A single CART tree wrapped as a forest.
pub fn fit_single<T: Real>(rows: Rows<'_, T>, params: ForestParams) -> Result<Forest<T>> {
    let t = fit_cart(rows, params.tree)?;
    Ok(Forest {
        mode: ForestMode::Single,
        params,
        arity: rows.dim,
        members: vec![vec![t]],
        member_weights: vec![T::one()],
    })
}

/// Extra Trees: `params.n_trees` randomized trees on the full sample, built
/// in parallel with per-tree seeds derived from `params.seed`.
pub fn fit_extra_trees<T: Real>(rows: Rows<'_, T>, params: ForestParams) -> Result<Forest<T>> {
    params.tree.validate()?;
    ensure!(params.n_trees >= 1, "n_trees must be at least 1");
    ensure!(!rows.is_empty(), "no training rows");
    Ok(Forest {
        mode: ForestMode::ExtraTrees,
        params,
        arity: rows.dim,
        members: vec![extra_trees_group(rows, params.n_trees, params.tree, params.seed)],
        member_weights: vec![T::one()],
    })
}

/// Sample-weight history of a boosting run: the distribution before each
/// round and after the last.
pub type BoostTrace<T> = Vec<Vec<T>>;

/// AdaBoost.R2 with linear loss and weight-proportional resampling.
pub fn fit_adaboost_r2<T: Real>(rows: Rows<'_, T>, params: ForestParams) -> Result<Forest<T>> {
    fit_adaboost_r2_traced(rows, params).map(|(f, _)| f)
}

/// [`fit_adaboost_r2`] that also returns the sample weights after each round.
pub fn fit_adaboost_r2_traced<T: Real>(
    rows: Rows<'_, T>,
    params: ForestParams,
) -> Result<(Forest<T>, BoostTrace<T>)> {
    params.tree.validate()?;
    ensure!(rows.len() >= 2, "boosting needs at least 2 rows");
    ensure!(params.n_estimators >= 1, "n_estimators must be at least 1");
    ensure!(params.base_trees >= 1, "base_trees must be at least 1");
    let n = rows.len();
    let d = rows.dim;
    let mut w = vec![T::one() / T::from_usize_lossy(n); n];
    let mut trace = vec![w.clone()];
    let mut members = Vec::new();
    let mut member_weights = Vec::new();
    let mut feats = vec![T::zero(); n * d];
    let mut targs = vec![T::zero(); n];
    for round in 0..params.n_estimators {
        let weights_f64: Vec<f64> = w.iter().map(|v| v.as_f64()).collect();
        let dist = WeightedIndex::new(&weights_f64).map_err(|e| Error::invalid(e.to_string()))?;
        let mut r = rng::stream(params.seed, TAG_BOOST_SAMPLE, round as u64);
        for k in 0..n {
            let i = dist.sample(&mut r);
            feats[k * d..(k + 1) * d].copy_from_slice(&rows.features[i * d..(i + 1) * d]);
            targs[k] = rows.targets[i];
        }
        let sample = Rows {
            features: &feats,
            targets: &targs,
            dim: d,
        };
        let seed = rng::derive(params.seed, TAG_BOOST_BASE, round as u64, 0);
        let group = extra_trees_group(sample, params.base_trees, params.tree, seed);
        let err: Vec<T> = (0..n)
            .into_par_iter()
            .map(|i| (mean_prediction(&group, &rows.features[i * d..(i + 1) * d]) - rows.targets[i]).abs())
            .collect();
        let max_err = err.iter().copied().fold(T::zero(), T::max);
        if max_err == T::zero() {
            // Perfect fit: keep it and stop.
            members.push(group);
            member_weights.push(T::one());
            break;
        }
        let avg_loss: T = err.iter().zip(&w).map(|(e, wi)| *wi * *e / max_err).sum();
        if avg_loss >= T::half() {
            if members.is_empty() {
                members.push(group);
                member_weights.push(T::one());
            }
            break;
        }
        let beta = avg_loss / (T::one() - avg_loss);
        for (wi, e) in w.iter_mut().zip(&err) {
            *wi *= beta.powf(T::one() - *e / max_err);
        }
        let total: T = w.iter().copied().sum();
        w.iter_mut().for_each(|v| *v /= total);
        trace.push(w.clone());
        members.push(group);
        member_weights.push((T::one() / beta).ln());
    }
    let forest = Forest {
        mode: ForestMode::AdaboostR2,
        params,
        arity: d,
        members,
        member_weights,
    };
    Ok((forest, trace))
}

/// Fits the requested model on raw dataset features.
pub fn fit_dataset<T: Real>(mode: ForestMode, ds: &Dataset, params: ForestParams) -> Result<Forest<T>> {
    ensure!(!ds.is_empty(), "training set is empty");
    let x = ds.feature_matrix::<T>();
    let y = ds.targets::<T>();
    let rows = Rows::new(&x, &y, ds.arity())?;
    match mode {
        ForestMode::Single => fit_single(rows, params),
        ForestMode::ExtraTrees => fit_extra_trees(rows, params),
        ForestMode::AdaboostR2 => fit_adaboost_r2(rows, params),
    }
}

pub fn save_forest<T: Real>(forest: &Forest<T>, path: &Path) -> Result<()> {
    fs::write(path, forest.to_json())?;
    Ok(())
}

pub fn load_forest<T: Real>(path: &Path) -> Result<Forest<T>> {
    Forest::from_json(&fs::read_to_string(path)?)
}
