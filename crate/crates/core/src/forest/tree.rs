//! Regression trees stored as flat node arrays.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::num::Real;

/// Marker in [`Tree::feature`] for leaf nodes.
pub const LEAF: u32 = u32::MAX;

/// Relative slack when comparing split scores, so that floating-point noise
/// does not override the (feature, threshold) tie-break.
const SCORE_EPS: f64 = 1e-12;

/// Stopping rules shared by every tree builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other rules stop it.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.min_samples_split >= 2, "min_samples_split must be at least 2");
        ensure!(self.min_samples_leaf >= 1, "min_samples_leaf must be at least 1");
        Ok(())
    }
}

/// Borrowed training rows: row-major features plus targets.
#[derive(Debug, Clone, Copy)]
pub struct Rows<'a, T> {
    pub features: &'a [T],
    pub targets: &'a [T],
    pub dim: usize,
}

impl<'a, T: Real> Rows<'a, T> {
    pub fn new(features: &'a [T], targets: &'a [T], dim: usize) -> Result<Self> {
        ensure!(!targets.is_empty(), "no training rows");
        ensure!(dim > 0, "feature dimension must be positive");
        ensure!(
            features.len() == dim * targets.len(),
            "{} feature values for {} rows of dimension {dim}",
            features.len(),
            targets.len()
        );
        ensure!(
            features.iter().chain(targets).all(|v| v.is_finite()),
            "training rows must be finite"
        );
        Ok(Rows { features, targets, dim })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    fn x(&self, row: usize, f: usize) -> T {
        self.features[row * self.dim + f]
    }
}

/// Read-only view of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode<T> {
    Leaf { value: T },
    Split { feature: usize, threshold: T, left: usize, right: usize },
}

/// A fitted tree; node 0 is the root. Internal nodes send `x[feature] <
/// threshold` to `left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Tree<T: Real> {
    pub feature: Vec<u32>,
    pub threshold: Vec<T>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// Mean training target of the node (the prediction at leaves).
    pub value: Vec<T>,
}

impl<T: Real> Tree<T> {
    fn empty() -> Self {
        Tree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            value: Vec::new(),
        }
    }

    fn push_leaf(&mut self, value: T) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(T::zero());
        self.left.push(0);
        self.right.push(0);
        self.value.push(value);
        self.feature.len() - 1
    }

    pub fn len(&self) -> usize {
        self.feature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature.is_empty()
    }

    pub fn node(&self, i: usize) -> TreeNode<T> {
        if self.feature[i] == LEAF {
            TreeNode::Leaf { value: self.value[i] }
        } else {
            TreeNode::Split {
                feature: self.feature[i] as usize,
                threshold: self.threshold[i],
                left: self.left[i] as usize,
                right: self.right[i] as usize,
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.feature.iter().filter(|&&f| f == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            if self.feature[i] != LEAF {
                stack.push((self.left[i] as usize, d + 1));
                stack.push((self.right[i] as usize, d + 1));
            }
        }
        best
    }

    /// Index of the leaf that `x` is routed to.
    #[inline]
    pub fn leaf_index(&self, x: &[T]) -> usize {
        let mut i = 0;
        loop {
            let f = self.feature[i];
            if f == LEAF {
                return i;
            }
            i = if x[f as usize] < self.threshold[i] {
                self.left[i] as usize
            } else {
                self.right[i] as usize
            };
        }
    }

    #[inline]
    pub fn predict(&self, x: &[T]) -> T {
        self.value[self.leaf_index(x)]
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.feature.iter().filter(|&&f| f != LEAF).map(|&f| f as usize).max()
    }

    /// Structural sanity: child indices in range and pointing forward.
    pub fn check(&self) -> Result<()> {
        let n = self.feature.len();
        ensure!(n > 0, "tree has no nodes");
        ensure!(
            self.threshold.len() == n
                && self.left.len() == n
                && self.right.len() == n
                && self.value.len() == n,
            "tree node arrays have different lengths"
        );
        for i in 0..n {
            if self.feature[i] != LEAF {
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                ensure!(
                    l > i && r > i && l < n && r < n,
                    "node {i} has invalid children"
                );
            }
        }
        Ok(())
    }
}

/// How candidate splits are proposed at each node.
#[derive(Debug)]
pub(crate) enum Splitter {
    /// Every midpoint between consecutive distinct values of every feature.
    Exhaustive,
    /// One uniform cut in `[min, max)` per feature.
    Random(ChaCha8Rng),
}

#[derive(Debug, Clone, Copy)]
struct Split<T> {
    feature: usize,
    threshold: T,
    score: T,
}

struct Builder<'a, T: Real> {
    rows: Rows<'a, T>,
    params: TreeParams,
    splitter: Splitter,
    scratch: Vec<(T, T)>,
}

/// `sum_l² / n_l + sum_r² / n_r` on node-centered targets. Maximizing it is
/// maximizing the variance reduction.
#[inline]
fn score<T: Real>(sl: T, nl: usize, sr: T, nr: usize) -> T {
    sl * sl / T::from_usize_lossy(nl) + sr * sr / T::from_usize_lossy(nr)
}

#[inline]
fn better<T: Real>(candidate: T, best: &Option<Split<T>>) -> bool {
    match best {
        None => true,
        Some(b) => candidate > b.score + T::lit(SCORE_EPS) * b.score.abs(),
    }
}

impl<'a, T: Real> Builder<'a, T> {
    fn best_exhaustive(&mut self, idx: &[usize], mean: T) -> Option<Split<T>> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split<T>> = None;
        let total: T = idx.iter().map(|&r| self.rows.targets[r] - mean).sum();
        for f in 0..self.rows.dim {
            self.scratch.clear();
            self.scratch
                .extend(idx.iter().map(|&r| (self.rows.x(r, f), self.rows.targets[r] - mean)));
            self.scratch.sort_by(|a, b| a.0.total_order(&b.0));
            let mut sl = T::zero();
            for k in 0..n - 1 {
                sl += self.scratch[k].1;
                let (a, b) = (self.scratch[k].0, self.scratch[k + 1].0);
                let nl = k + 1;
                if a == b || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let s = score(sl, nl, total - sl, n - nl);
                if better(s, &best) {
                    best = Some(Split {
                        feature: f,
                        threshold: midpoint(a, b),
                        score: s,
                    });
                }
            }
        }
        best
    }

    fn best_random(&mut self, idx: &[usize], mean: T) -> Option<Split<T>> {
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split<T>> = None;
        for f in 0..self.rows.dim {
            let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
            for &r in idx {
                let v = self.rows.x(r, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(hi > lo) {
                continue;
            }
            let u: f64 = match &mut self.splitter {
                Splitter::Random(rng) => rng.random(),
                Splitter::Exhaustive => unreachable!(),
            };
            let cut = lo + T::lit(u) * (hi - lo);
            if !(cut > lo) {
                continue;
            }
            let (mut sl, mut sr, mut nl) = (T::zero(), T::zero(), 0usize);
            for &r in idx {
                let t = self.rows.targets[r] - mean;
                if self.rows.x(r, f) < cut {
                    sl += t;
                    nl += 1;
                } else {
                    sr += t;
                }
            }
            let nr = idx.len() - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let s = score(sl, nl, sr, nr);
            if better(s, &best) {
                best = Some(Split {
                    feature: f,
                    threshold: cut,
                    score: s,
                });
            }
        }
        best
    }

    fn build(mut self) -> Tree<T> {
        let mut tree = Tree::empty();
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        // (node, start, end, depth)
        let mut stack = vec![];
        let root_mean = mean_of(&self.rows, &idx);
        tree.push_leaf(root_mean);
        stack.push((0usize, 0usize, idx.len(), 0usize));
        while let Some((node, start, end, depth)) = stack.pop() {
            let mean = tree.value[node];
            let part = &mut idx[start..end];
            let n = part.len();
            if n < self.params.min_samples_split
                || self.params.max_depth.is_some_and(|d| depth >= d)
                || part.iter().all(|&r| self.rows.targets[r] == self.rows.targets[part[0]])
            {
                continue;
            }
            let split = match self.splitter {
                Splitter::Exhaustive => self.best_exhaustive(part, mean),
                Splitter::Random(_) => self.best_random(part, mean),
            };
            let Some(split) = split else { continue };
            // Gain over the unsplit node, whose score is sum² / n on centered
            // targets (zero up to rounding).
            let sse: T = part
                .iter()
                .map(|&r| (self.rows.targets[r] - mean) * (self.rows.targets[r] - mean))
                .sum();
            let total: T = part.iter().map(|&r| self.rows.targets[r] - mean).sum();
            let gain = split.score - total * total / T::from_usize_lossy(n);
            if !(gain > T::lit(SCORE_EPS) * sse) {
                continue;
            }
            let rows = self.rows;
            let mid = partition(part, |r| rows.x(r, split.feature) < split.threshold);
            let (lo, hi) = part.split_at(mid);
            let l = tree.push_leaf(mean_of(&rows, lo));
            let r = tree.push_leaf(mean_of(&rows, hi));
            tree.feature[node] = split.feature as u32;
            tree.threshold[node] = split.threshold;
            tree.left[node] = l as u32;
            tree.right[node] = r as u32;
            stack.push((r, start + mid, end, depth + 1));
            stack.push((l, start, start + mid, depth + 1));
        }
        tree
    }
}

fn mean_of<T: Real>(rows: &Rows<'_, T>, idx: &[usize]) -> T {
    idx.iter().map(|&r| rows.targets[r]).sum::<T>() / T::from_usize_lossy(idx.len())
}

/// Midpoint of `a < b` that still separates them.
fn midpoint<T: Real>(a: T, b: T) -> T {
    let m = a + (b - a) * T::half();
    if m > a {
        m
    } else {
        b
    }
}

/// Moves rows satisfying `pred` to the front, keeping relative order on each
/// side. Returns the size of the front part.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (front, back): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&r| pred(r));
    let k = front.len();
    idx[..k].copy_from_slice(&front);
    idx[k..].copy_from_slice(&back);
    k
}

pub(crate) fn fit_tree<T: Real>(rows: Rows<'_, T>, params: TreeParams, splitter: Splitter) -> Tree<T> {
    Builder {
        rows,
        params,
        splitter,
        scratch: Vec::with_capacity(rows.len()),
    }
    .build()
}

/// Greedy CART regression tree over exhaustive midpoint thresholds.
pub fn fit_cart<T: Real>(rows: Rows<'_, T>, params: TreeParams) -> Result<Tree<T>> {
    params.validate()?;
    ensure!(!rows.is_empty(), "no training rows");
    Ok(fit_tree(rows, params, Splitter::Exhaustive))
}

/// One extremely randomized tree (a single uniform cut per feature per node).
pub fn fit_random_tree<T: Real>(rows: Rows<'_, T>, params: TreeParams, rng: ChaCha8Rng) -> Result<Tree<T>> {
    params.validate()?;
    ensure!(!rows.is_empty(), "no training rows");
    Ok(fit_tree(rows, params, Splitter::Random(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows1d<'a>(x: &'a [f64], y: &'a [f64]) -> Rows<'a, f64> {
        Rows::new(x, y, 1).unwrap()
    }

    #[test]
    fn constant_target_is_one_leaf() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [4.0; 4];
        let t = fit_cart(rows1d(&x, &y), TreeParams::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.node(0), TreeNode::Leaf { value: 4.0 });
    }

    #[test]
    fn depth_one_step_split() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 0.0, 10.0, 10.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let t = fit_cart(rows1d(&x, &y), params).unwrap();
        assert_eq!(
            t.node(0),
            TreeNode::Split {
                feature: 0,
                threshold: 1.5,
                left: 1,
                right: 2
            }
        );
        assert_eq!(t.node(1), TreeNode::Leaf { value: 0.0 });
        assert_eq!(t.node(2), TreeNode::Leaf { value: 10.0 });
    }

    #[test]
    fn unconstrained_tree_interpolates() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 17) % 40) as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 1.3).sin() * 5.0).collect();
        let t = fit_cart(rows1d(&x, &y), TreeParams::default()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(t.predict(&[*a]), *b);
        }
        assert_eq!(t.leaf_count(), 40);
        t.check().unwrap();
    }

    #[test]
    fn stopping_rules() {
        let x: Vec<f64> = (0..32).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let r = rows1d(&x, &y);
        let t = fit_cart(r, TreeParams { max_depth: Some(3), ..TreeParams::default() }).unwrap();
        assert!(t.depth() <= 3);
        let t = fit_cart(r, TreeParams { min_samples_leaf: 5, ..TreeParams::default() }).unwrap();
        for i in 0..t.len() {
            if let TreeNode::Leaf { .. } = t.node(i) {
                let n = x.iter().filter(|&&v| t.leaf_index(&[v]) == i).count();
                assert!(n >= 5);
            }
        }
        let t = fit_cart(r, TreeParams { min_samples_split: 40, ..TreeParams::default() }).unwrap();
        assert_eq!(t.len(), 1);
        assert!(TreeParams { min_samples_split: 1, ..TreeParams::default() }.validate().is_err());
    }

    #[test]
    fn ties_pick_lowest_feature() {
        // Both features separate the targets identically.
        let x = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let y = [0.0, 0.0, 5.0, 5.0];
        let t = fit_cart(Rows::new(&x, &y, 2).unwrap(), TreeParams::default()).unwrap();
        match t.node(0) {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            n => panic!("expected a split, got {n:?}"),
        }
    }

    #[test]
    fn random_tree_is_seeded() {
        use rand::SeedableRng;
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let a = fit_random_tree(rows1d(&x, &y), TreeParams::default(), ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = fit_random_tree(rows1d(&x, &y), TreeParams::default(), ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = fit_random_tree(rows1d(&x, &y), TreeParams::default(), ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(a.predict(&[*xi]), *yi);
        }
    }

    #[test]
    fn rows_validation() {
        assert!(Rows::<f64>::new(&[], &[], 1).is_err());
        assert!(Rows::new(&[1.0, 2.0], &[1.0], 1).is_err());
        assert!(Rows::new(&[f64::NAN], &[1.0], 1).is_err());
    }
}
