//! Fully connected feed-forward regressor trained with Adam on MSE.
//!
//! Hidden layers use ReLU, the single output neuron is linear. Features and
//! target are standardized with training-set statistics stored in the model,
//! so [`MlpModel::predict`] takes raw coordinates and returns dBm.
//!
//! Weights are stored row-major with shape `(fan_in, fan_out)`.

pub mod adam;
pub mod io;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{rng, NormStats, SplitSets};
use crate::error::{ensure, Error, Result};
use crate::num::Real;

pub use adam::{AdamParams, AdamState};

const TAG_INIT: u64 = 0x11;
const TAG_SHUFFLE: u64 = 0x12;

/// The two hidden-layer layouts in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "mlp32x128")]
    Mlp32x128,
    #[serde(rename = "mlp64x256")]
    Mlp64x256,
}

impl Architecture {
    pub fn hidden(self) -> Vec<usize> {
        match self {
            Architecture::Mlp32x128 => vec![32, 128],
            Architecture::Mlp64x256 => vec![64, 256],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Mlp32x128 => "mlp32x128",
            Architecture::Mlp64x256 => "mlp64x256",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp32x128" => Ok(Architecture::Mlp32x128),
            "mlp64x256" => Ok(Architecture::Mlp64x256),
            other => Err(Error::invalid(format!("unknown MLP architecture '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MlpConfig<T: Real> {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    #[serde(flatten)]
    pub adam: AdamParams<T>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl<T: Real> MlpConfig<T> {
    /// Preset architecture with Adam at lr 0.001, 2000 epochs, batch 32.
    pub fn preset(arch: Architecture, input_dim: usize) -> Self {
        MlpConfig {
            input_dim,
            hidden: arch.hidden(),
            adam: AdamParams::default(),
            epochs: 2000,
            batch_size: 32,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.input_dim > 0, "input dimension must be positive");
        ensure!(
            self.hidden.iter().all(|&w| w > 0),
            "hidden layer widths must be positive"
        );
        ensure!(
            self.adam.learning_rate > T::zero(),
            "learning rate must be positive"
        );
        ensure!(
            self.adam.beta1 >= T::zero()
                && self.adam.beta1 < T::one()
                && self.adam.beta2 >= T::zero()
                && self.adam.beta2 < T::one(),
            "Adam betas must lie in [0, 1)"
        );
        ensure!(self.adam.epsilon > T::zero(), "Adam epsilon must be positive");
        ensure!(self.batch_size >= 1, "batch size must be at least 1");
        Ok(())
    }

    /// Layer widths from input to the single output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim];
        s.extend(&self.hidden);
        s.push(1);
        s
    }
}

/// One affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dense<T: Real> {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `(fan_in, fan_out)`.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            fan_in,
            fan_out,
            weights: vec![T::zero(); fan_in * fan_out],
            biases: vec![T::zero(); fan_out],
        }
    }

    /// `out = input · W + b` for `batch` rows, optionally followed by ReLU.
    fn forward_into(&self, input: &[T], batch: usize, relu: bool, out: &mut [T]) {
        let (fi, fo) = (self.fan_in, self.fan_out);
        for b in 0..batch {
            let row = &mut out[b * fo..(b + 1) * fo];
            row.copy_from_slice(&self.biases);
            for (i, &a) in input[b * fi..(b + 1) * fi].iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let w = &self.weights[i * fo..(i + 1) * fo];
                for (o, &wij) in row.iter_mut().zip(w) {
                    *o += a * wij;
                }
            }
            if relu {
                for o in row.iter_mut() {
                    if *o < T::zero() {
                        *o = T::zero();
                    }
                }
            }
        }
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

/// Per-epoch training record. Losses are MSE in the standardized target
/// domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpochLog<T: Real> {
    pub epoch: usize,
    pub train_mse: T,
    pub validation_mse: Option<T>,
}

/// Gradients with the same layout as the model layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Real> Gradients<T> {
    fn zeros_like(layers: &[Dense<T>]) -> Self {
        Gradients {
            layers: layers.iter().map(|l| Dense::zeros(l.fan_in, l.fan_out)).collect(),
        }
    }

    fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = T::zero());
            l.biases.iter_mut().for_each(|b| *b = T::zero());
        }
    }

    /// Flat views in parameter order (weights then biases, layer by layer).
    pub fn slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weights[..], &l.biases[..]])
            .collect()
    }
}

/// Reusable activation and delta buffers for a given batch capacity.
struct Workspace<T: Real> {
    /// `acts[0]` is the input batch, `acts[l]` the output of layer `l - 1`.
    acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
}

impl<T: Real> Workspace<T> {
    fn new(sizes: &[usize], capacity: usize) -> Self {
        Workspace {
            acts: sizes.iter().map(|&s| vec![T::zero(); s * capacity]).collect(),
            deltas: sizes.iter().map(|&s| vec![T::zero(); s * capacity]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T: Real> {
    pub config: MlpConfig<T>,
    pub layers: Vec<Dense<T>>,
    pub norm: NormStats<T>,
    pub training_log: Vec<EpochLog<T>>,
}

impl<T: Real> MlpModel<T> {
    /// He-normal weights (`std = sqrt(2 / fan_in)`), zero biases, identity
    /// normalization.
    pub fn init(config: &MlpConfig<T>) -> Result<Self> {
        config.validate()?;
        let sizes = config.layer_sizes();
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fi, fo) = (w[0], w[1]);
                let std = (2.0 / fi as f64).sqrt();
                let dist = Normal::new(0.0, std).expect("finite std");
                let mut r = rng::stream(config.seed, TAG_INIT, l as u64);
                Dense {
                    fan_in: fi,
                    fan_out: fo,
                    weights: (0..fi * fo).map(|_| T::lit(dist.sample(&mut r))).collect(),
                    biases: vec![T::zero(); fo],
                }
            })
            .collect();
        Ok(MlpModel {
            config: config.clone(),
            layers,
            norm: NormStats::identity(config.input_dim),
            training_log: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].fan_in];
        s.extend(self.layers.iter().map(|l| l.fan_out));
        s
    }

    /// Checks that layer shapes chain from the input dimension to one output.
    pub fn check_shapes(&self) -> Result<()> {
        ensure!(!self.layers.is_empty(), "model has no layers");
        let expected = self.config.layer_sizes();
        ensure!(
            self.sizes() == expected,
            "layer widths {:?} do not match the configuration {:?}",
            self.sizes(),
            expected
        );
        for l in &self.layers {
            ensure!(
                l.weights.len() == l.fan_in * l.fan_out && l.biases.len() == l.fan_out,
                "layer buffers do not match their declared shape"
            );
        }
        ensure!(
            self.norm.dim() == self.config.input_dim,
            "normalization statistics have the wrong dimension"
        );
        Ok(())
    }

    fn forward_ws(&self, ws: &mut Workspace<T>, batch: usize) {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let input = &head[l][..batch * layer.fan_in];
            let out = &mut tail[0][..batch * layer.fan_out];
            layer.forward_into(input, batch, l != last, out);
        }
    }

    /// Standardized-domain outputs for row-major standardized inputs.
    pub fn forward_batch(&self, inputs: &[T]) -> Result<Vec<T>> {
        let d = self.input_dim();
        ensure!(
            inputs.len() % d == 0,
            "input length {} is not a multiple of the input dimension {d}",
            inputs.len()
        );
        let n = inputs.len() / d;
        let chunk = 256.min(n.max(1));
        let mut ws = Workspace::new(&self.sizes(), chunk);
        let mut out = Vec::with_capacity(n);
        for rows in inputs.chunks(chunk * d) {
            let b = rows.len() / d;
            ws.acts[0][..rows.len()].copy_from_slice(rows);
            self.forward_ws(&mut ws, b);
            out.extend_from_slice(&ws.acts[self.layers.len()][..b]);
        }
        Ok(out)
    }

    /// Standardized-domain output for one standardized input vector.
    pub fn forward(&self, features: &[T]) -> Result<T> {
        ensure!(
            features.len() == self.input_dim(),
            "expected {} features, got {}",
            self.input_dim(),
            features.len()
        );
        Ok(self.forward_batch(features)?[0])
    }

    /// Forward + backward over a batch held in `ws`; accumulates into
    /// `grads` (cleared first) and returns the batch MSE.
    fn backprop_ws(&self, ws: &mut Workspace<T>, targets: &[T], grads: &mut Gradients<T>) -> T {
        let batch = targets.len();
        self.forward_ws(ws, batch);
        grads.clear();
        let nl = self.layers.len();
        let scale = T::two() / T::from_usize_lossy(batch);
        let mut loss = T::zero();
        {
            let out = &ws.acts[nl];
            let delta = &mut ws.deltas[nl];
            for b in 0..batch {
                let r = out[b] - targets[b];
                loss += r * r;
                delta[b] = scale * r;
            }
        }
        for l in (0..nl).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let (fi, fo) = (layer.fan_in, layer.fan_out);
            let (d_lo, d_hi) = ws.deltas.split_at_mut(l + 1);
            let dz = &d_hi[0][..batch * fo];
            let a_in = &ws.acts[l][..batch * fi];
            for b in 0..batch {
                let dz_row = &dz[b * fo..(b + 1) * fo];
                for (gb, &d) in g.biases.iter_mut().zip(dz_row) {
                    *gb += d;
                }
                for (i, &a) in a_in[b * fi..(b + 1) * fi].iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    let gw = &mut g.weights[i * fo..(i + 1) * fo];
                    for (w, &d) in gw.iter_mut().zip(dz_row) {
                        *w += a * d;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // Delta of the previous (ReLU) layer; ReLU'(0) is taken as 0.
            let dprev = &mut d_lo[l][..batch * fi];
            for b in 0..batch {
                let dz_row = &dz[b * fo..(b + 1) * fo];
                for i in 0..fi {
                    dprev[b * fi + i] = if a_in[b * fi + i] > T::zero() {
                        dot(dz_row, &layer.weights[i * fo..(i + 1) * fo])
                    } else {
                        T::zero()
                    };
                }
            }
        }
        loss / T::from_usize_lossy(batch)
    }

    /// Batch MSE and its gradient for standardized inputs and targets.
    pub fn loss_and_gradients(&self, inputs: &[T], targets: &[T]) -> Result<(T, Gradients<T>)> {
        ensure!(!targets.is_empty(), "batch must not be empty");
        let d = self.input_dim();
        ensure!(
            inputs.len() == d * targets.len(),
            "batch has {} input values for {} targets of dimension {d}",
            inputs.len(),
            targets.len()
        );
        let mut ws = Workspace::new(&self.sizes(), targets.len());
        ws.acts[0].copy_from_slice(inputs);
        let mut grads = Gradients::zeros_like(&self.layers);
        let loss = self.backprop_ws(&mut ws, targets, &mut grads);
        Ok((loss, grads))
    }

    /// Mutable flat views in parameter order (weights then biases, layer by
    /// layer), matching [`Gradients::slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights[..], &mut l.biases[..]])
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.biases.len()])
            .collect()
    }

    /// Applies one Adam update with the model's own hyper-parameters.
    pub fn adam_step(&mut self, state: &mut AdamState<T>, grads: &Gradients<T>) {
        let hp = self.config.adam;
        state.step(&mut self.param_slices_mut(), &grads.slices(), &hp);
    }

    /// Prediction in dBm for raw (unstandardized) features.
    pub fn predict(&self, raw: &[T]) -> Result<T> {
        Ok(self.predict_batch(raw)?[0])
    }

    /// Row-major batch form of [`MlpModel::predict`].
    pub fn predict_batch(&self, raw: &[T]) -> Result<Vec<T>> {
        let d = self.input_dim();
        ensure!(
            !raw.is_empty() && raw.len() % d == 0,
            "expected a multiple of {d} features, got {}",
            raw.len()
        );
        let mut z = raw.to_vec();
        for row in z.chunks_mut(d) {
            self.norm.apply_features(row);
        }
        Ok(self
            .forward_batch(&z)?
            .into_iter()
            .map(|y| self.norm.invert_target(y))
            .collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }
}

fn standardized(ds: &crate::dataset::Dataset, norm: &NormStats<f64>) -> (Vec<f64>, Vec<f64>) {
    let d = norm.dim();
    let mut x = ds.feature_matrix::<f64>();
    for row in x.chunks_mut(d) {
        norm.apply_features(row);
    }
    let y = ds.targets::<f64>().into_iter().map(|v| norm.apply_target(v)).collect();
    (x, y)
}

fn cast_vec<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Trains a fresh model on `splits.train`, logging validation MSE each epoch.
///
/// Each epoch reshuffles the training rows (seeded by the config seed and the
/// epoch number) and runs one Adam step per minibatch, including a final
/// short batch. No early stopping; the final-epoch model is returned.
pub fn train<T: Real>(config: &MlpConfig<T>, splits: &SplitSets) -> Result<MlpModel<T>> {
    config.validate()?;
    let train_set = &splits.train;
    ensure!(!train_set.is_empty(), "training set is empty");
    ensure!(
        train_set.arity() == config.input_dim,
        "training rows have {} features, model expects {}",
        train_set.arity(),
        config.input_dim
    );
    let d = config.input_dim;
    // Statistics are fitted in f64 and then cast.
    let norm64 = NormStats::fit(
        &train_set.feature_matrix::<f64>(),
        d,
        &train_set.targets::<f64>(),
    )?;
    let norm = NormStats {
        feature_mean: cast_vec(&norm64.feature_mean),
        feature_std: cast_vec(&norm64.feature_std),
        target_mean: T::lit(norm64.target_mean),
        target_std: T::lit(norm64.target_std),
    };
    let (x64, y64) = standardized(train_set, &norm64);
    let (x, y): (Vec<T>, Vec<T>) = (cast_vec(&x64), cast_vec(&y64));
    let val = if splits.validation.is_empty() {
        None
    } else {
        let (vx, vy) = standardized(&splits.validation, &norm64);
        Some((cast_vec::<T>(&vx), cast_vec::<T>(&vy)))
    };

    let mut model = MlpModel::init(config)?;
    model.norm = norm;
    fit_standardized(&mut model, &x, &y, val.as_ref().map(|(a, b)| (&a[..], &b[..])))?;
    Ok(model)
}

/// Training loop on already standardized data. Appends to the model's log.
pub fn fit_standardized<T: Real>(
    model: &mut MlpModel<T>,
    x: &[T],
    y: &[T],
    validation: Option<(&[T], &[T])>,
) -> Result<()> {
    let d = model.input_dim();
    let n = y.len();
    ensure!(n > 0, "training set is empty");
    ensure!(x.len() == n * d, "feature matrix does not match targets");
    let cfg = model.config.clone();
    let bs = cfg.batch_size.min(n);
    let mut ws = Workspace::new(&model.sizes(), bs);
    let mut grads = Gradients::zeros_like(&model.layers);
    let mut adam = AdamState::new(&model.param_shapes());
    let mut order: Vec<usize> = (0..n).collect();
    let mut targets = vec![T::zero(); bs];
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(cfg.seed, TAG_SHUFFLE, epoch as u64));
        let mut sse = T::zero();
        for idx in order.chunks(bs) {
            let b = idx.len();
            for (k, &i) in idx.iter().enumerate() {
                ws.acts[0][k * d..(k + 1) * d].copy_from_slice(&x[i * d..(i + 1) * d]);
                targets[k] = y[i];
            }
            let loss = model.backprop_ws(&mut ws, &targets[..b], &mut grads);
            sse += loss * T::from_usize_lossy(b);
            model.adam_step(&mut adam, &grads);
        }
        let validation_mse = match validation {
            Some((vx, vy)) if !vy.is_empty() => {
                let pred = model.forward_batch(vx)?;
                let s: T = pred.iter().zip(vy).map(|(p, t)| (*p - *t) * (*p - *t)).sum();
                Some(s / T::from_usize_lossy(vy.len()))
            }
            _ => None,
        };
        model.training_log.push(EpochLog {
            epoch: model.training_log.len(),
            train_mse: sse / T::from_usize_lossy(n),
            validation_mse,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split, ChannelSample, Dataset, DatasetMeta};

    fn tiny_config(hidden: Vec<usize>, input_dim: usize) -> MlpConfig<f64> {
        MlpConfig {
            input_dim,
            hidden,
            adam: AdamParams::default(),
            epochs: 0,
            batch_size: 8,
            seed: 3,
        }
    }

    #[test]
    fn preset_shapes() {
        let m = MlpModel::init(&MlpConfig::<f64>::preset(Architecture::Mlp32x128, 3)).unwrap();
        let shapes: Vec<_> = m.layers.iter().map(|l| (l.fan_in, l.fan_out)).collect();
        assert_eq!(shapes, vec![(3, 32), (32, 128), (128, 1)]);
        let m = MlpModel::init(&MlpConfig::<f64>::preset(Architecture::Mlp64x256, 5)).unwrap();
        let shapes: Vec<_> = m.layers.iter().map(|l| (l.fan_in, l.fan_out)).collect();
        assert_eq!(shapes, vec![(5, 64), (64, 256), (256, 1)]);
        assert!("mlp16".parse::<Architecture>().is_err());
    }

    #[test]
    fn init_is_seeded_he_normal() {
        let cfg = MlpConfig::<f64>::preset(Architecture::Mlp32x128, 3);
        let a = MlpModel::init(&cfg).unwrap();
        assert_eq!(a, MlpModel::init(&cfg).unwrap());
        let w = &a.layers[1].weights;
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let expected = (2.0f64 / 32.0).sqrt();
        assert!((std - expected).abs() / expected < 0.1);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = MlpModel::init(&tiny_config(vec![4, 4], 3)).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn relu_clips_negative_input() {
        let mut m = MlpModel::init(&tiny_config(vec![1], 1)).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 1.0);
        }
        assert_eq!(m.forward(&[-5.0]).unwrap(), 0.0);
        assert_eq!(m.forward(&[5.0]).unwrap(), 5.0);
    }

    #[test]
    fn hand_built_two_two_one() {
        let mut m = MlpModel::init(&tiny_config(vec![2], 2)).unwrap();
        // W1 rows are inputs: [[1, -1], [2, 0.5]], b1 = [0.5, -1]
        m.layers[0].weights = vec![1.0, -1.0, 2.0, 0.5];
        m.layers[0].biases = vec![0.5, -1.0];
        m.layers[1].weights = vec![3.0, -2.0];
        m.layers[1].biases = vec![0.25];
        // x = (1, 2): z1 = (1 + 4 + 0.5, -1 + 1 - 1) = (5.5, -1) -> relu (5.5, 0)
        // y = 3 * 5.5 + 0 + 0.25 = 16.75
        assert_eq!(m.forward(&[1.0, 2.0]).unwrap(), 16.75);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let m = MlpModel::init(&tiny_config(vec![3, 3], 2)).unwrap();
        let x = vec![0.1, 0.2, -0.5, 0.7, 1.0, -1.0];
        let y = m.forward_batch(&x).unwrap();
        let (loss, g) = m.loss_and_gradients(&x, &y).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(m.loss_and_gradients(&[], &[]).is_err());
    }

    #[test]
    fn residual_sign_flip() {
        let m = MlpModel::init(&tiny_config(vec![3], 2)).unwrap();
        let x = vec![0.3, -0.2, 0.9, 0.4];
        let y = m.forward_batch(&x).unwrap();
        let r = [0.7, -0.3];
        let up: Vec<f64> = y.iter().zip(&r).map(|(a, b)| a + b).collect();
        let dn: Vec<f64> = y.iter().zip(&r).map(|(a, b)| a - b).collect();
        let (la, ga) = m.loss_and_gradients(&x, &up).unwrap();
        let (lb, gb) = m.loss_and_gradients(&x, &dn).unwrap();
        assert!((la - lb).abs() < 1e-15);
        let last = m.layers.len() - 1;
        assert!((ga.layers[last].biases[0] + gb.layers[last].biases[0]).abs() < 1e-15);
    }

    fn linear_dataset(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| {
                let x = (i as f64 * 0.61803) % 1.0 * 5.0;
                let y = (i as f64 * 0.41421) % 1.0 * 5.0;
                let z = (i as f64 * 0.73205) % 1.0 * 1.7;
                ChannelSample {
                    rss_dbm: -20.0 + 0.8 * x - 0.5 * y + 1.5 * z,
                    x,
                    y,
                    z,
                    room: None,
                }
            })
            .collect();
        Dataset::new(rows, DatasetMeta::external()).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let splits = split(&linear_dataset(50), 1).unwrap();
        let cfg = tiny_config(vec![4], 3);
        let m = train(&cfg, &splits).unwrap();
        assert!(m.training_log.is_empty());
        assert_eq!(m.layers, MlpModel::init(&cfg).unwrap().layers);
    }

    #[test]
    fn training_is_deterministic_and_logs_epochs() {
        let splits = split(&linear_dataset(200), 2).unwrap();
        let mut cfg = tiny_config(vec![8, 8], 3);
        cfg.epochs = 5;
        let a = train(&cfg, &splits).unwrap();
        let b = train(&cfg, &splits).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.training_log.len(), 5);
        assert!(a.training_log.iter().all(|e| e.validation_mse.is_some()));
    }

    #[test]
    fn learns_a_linear_target() {
        let ds = linear_dataset(1000);
        let splits = split(&ds, 4).unwrap();
        let mut cfg = tiny_config(vec![16, 16], 3);
        cfg.epochs = 500;
        cfg.batch_size = 32;
        let m = train(&cfg, &splits).unwrap();
        assert!(m.training_log.last().unwrap().train_mse < 1e-3);
    }

    #[test]
    fn batch_equals_scalar_prediction() {
        let ds = linear_dataset(300);
        let splits = split(&ds, 4).unwrap();
        let mut cfg = tiny_config(vec![8, 8], 3);
        cfg.epochs = 3;
        let m = train(&cfg, &splits).unwrap();
        let feats = ds.feature_matrix::<f64>();
        let batch = m.predict_batch(&feats).unwrap();
        for (row, b) in feats.chunks(3).zip(&batch) {
            assert!((m.predict(row).unwrap() - b).abs() <= 1e-12 * b.abs());
        }
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn overfits_a_tiny_dataset() {
        let ds = linear_dataset(10);
        let splits = SplitSets {
            train: ds.clone(),
            validation: ds.clone(),
            test: ds.clone(),
        };
        let mut cfg = tiny_config(vec![32, 32], 3);
        cfg.epochs = 1500;
        cfg.batch_size = 10;
        cfg.adam.learning_rate = 0.01;
        let m = train(&cfg, &splits).unwrap();
        let r = ds.rows[3];
        let p = m.predict(&r.features::<f64>()).unwrap();
        assert!((p - r.rss_dbm).abs() < 0.05, "{p} vs {}", r.rss_dbm);
    }

    #[test]
    fn wrong_arity_or_empty_training_rejected() {
        let ds = linear_dataset(20);
        let splits = split(&ds, 1).unwrap();
        assert!(train(&tiny_config(vec![4], 5), &splits).is_err());
        let empty = SplitSets {
            train: Dataset::new(vec![], DatasetMeta::external()).unwrap(),
            ..splits
        };
        assert!(train(&tiny_config(vec![4], 3), &empty).is_err());
    }

    #[test]
    fn single_precision_trains() {
        let splits = split(&linear_dataset(200), 2).unwrap();
        let mut cfg = MlpConfig::<f32> {
            input_dim: 3,
            hidden: vec![8],
            adam: AdamParams::default(),
            epochs: 50,
            batch_size: 16,
            seed: 1,
        };
        cfg.adam.learning_rate = 0.01;
        let m = train(&cfg, &splits).unwrap();
        let log = &m.training_log;
        assert!(log.last().unwrap().train_mse < log[0].train_mse);
    }
}
