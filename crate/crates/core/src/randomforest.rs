//! Random-forest regressor over graph-level feature vectors.
//!
//! Trees are joint two-target regressors: each split is chosen to maximize
//! the summed reduction of squared error over both outputs (K and mu), so a
//! single tree predicts the pair. The forest bags rows only; every split
//! scans every feature.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{child_seed, rng_from_seed};

/// Number of regression targets (bulk and shear modulus).
pub const N_TARGETS: usize = 2;

/// One node of a tree, stored in a flat arena; `left`/`right` index into it.
/// Samples with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { prediction: [f64; N_TARGETS] },
}

/// A fitted regression tree. The root is node 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Per-feature sum of squared-error decrease over this tree's splits.
    pub importance: Vec<f64>,
}

impl Tree {
    /// A single-leaf tree, mainly useful for assembling forests by hand.
    pub fn leaf(prediction: [f64; N_TARGETS], n_features: usize) -> Self {
        Tree { nodes: vec![TreeNode::Leaf { prediction }], importance: vec![0.0; n_features] }
    }

    pub fn predict(&self, x: &[f64]) -> [f64; N_TARGETS] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { prediction } => return *prediction,
                TreeNode::Internal { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() || self.importance.len() != n_features {
            return Err(Error::Format("tree has no nodes or wrong importance length".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Leaf { prediction } if prediction.iter().all(|v| v.is_finite()) => {}
                TreeNode::Internal { feature, threshold, left, right }
                    if *feature < n_features
                        && threshold.is_finite()
                        && *left > i
                        && *right > i
                        && *left < self.nodes.len()
                        && *right < self.nodes.len() => {}
                _ => return Err(Error::Format(format!("malformed tree node {i}"))),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until another stopping rule fires.
    pub max_depth: Option<usize>,
    /// Minimum number of (bootstrap) samples in each child of a split.
    pub min_leaf: usize,
    /// Resample rows with replacement before growing the tree.
    pub bootstrap: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: Some(12), min_leaf: 2, bootstrap: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 50, tree: TreeParams::default(), seed: 0 }
    }
}

fn check_data(x: &[Vec<f64>], y: &[[f64; N_TARGETS]]) -> Result<usize> {
    if x.is_empty() {
        return Err(invalid("training data is empty"));
    }
    if x.len() != y.len() {
        return Err(invalid(format!("{} feature rows but {} targets", x.len(), y.len())));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(invalid("feature vectors are empty"));
    }
    if x.iter().any(|r| r.len() != d) {
        return Err(invalid("feature rows have different lengths"));
    }
    if x.iter().flatten().chain(y.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(invalid("training data contains non-finite values"));
    }
    Ok(d)
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Number of sorted samples that go left.
    n_left: usize,
    gain: f64,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [[f64; N_TARGETS]],
    params: TreeParams,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
}

fn mean_target(y: &[[f64; N_TARGETS]], idx: &[usize]) -> [f64; N_TARGETS] {
    let mut m = [0.0; N_TARGETS];
    for &i in idx {
        for t in 0..N_TARGETS {
            m[t] += y[i][t];
        }
    }
    m.map(|s| s / idx.len() as f64)
}

impl Grower<'_> {
    /// Best split over all features and midpoints between distinct sorted
    /// values. The gain is the squared-error decrease summed over targets,
    /// computed on node-centered targets: `S_l^2/n_l + S_r^2/n_r - S^2/n`.
    fn best_split(&self, idx: &[usize], mean: [f64; N_TARGETS]) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let centered = |i: usize| -> [f64; N_TARGETS] { std::array::from_fn(|t| self.y[i][t] - mean[t]) };
        let mut total = [0.0; N_TARGETS];
        let mut sse = 0.0;
        for &i in idx.iter() {
            let c = centered(i);
            for t in 0..N_TARGETS {
                total[t] += c[t];
                sse += c[t] * c[t];
            }
        }
        if sse == 0.0 {
            return None;
        }
        let base: f64 = total.iter().map(|s| s * s).sum::<f64>() / n as f64;
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for f in 0..self.x[0].len() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = [0.0; N_TARGETS];
            for k in 0..n - 1 {
                let c = centered(order[k]);
                for t in 0..N_TARGETS {
                    left[t] += c[t];
                }
                let n_left = k + 1;
                let (a, b) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if n_left < min_leaf || n - n_left < min_leaf || a == b {
                    continue;
                }
                let n_right = (n - n_left) as f64;
                let gain: f64 = (0..N_TARGETS)
                    .map(|t| left[t] * left[t] / n_left as f64 + (total[t] - left[t]).powi(2) / n_right)
                    .sum::<f64>()
                    - base;
                if best.as_ref().is_none_or(|s| gain > s.gain) {
                    let mid = 0.5 * (a + b);
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Split { feature: f, threshold, n_left, gain });
                }
            }
        }
        // Gains within rounding noise of zero are treated as no improvement.
        best.filter(|s| s.gain > 1e-12 * sse)
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = mean_target(self.y, idx);
        self.nodes.push(TreeNode::Leaf { prediction: mean });
        if self.params.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let Some(split) = self.best_split(idx, mean) else {
            return id;
        };
        let f = split.feature;
        idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
        self.importance[f] += split.gain;
        let (l, r) = idx.split_at_mut(split.n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Internal { feature: f, threshold: split.threshold, left, right };
        id
    }
}

/// Grows one tree. With `params.bootstrap` the rows are resampled with
/// replacement using `seed`; otherwise every row is used once.
pub fn train_tree(x: &[Vec<f64>], y: &[[f64; N_TARGETS]], seed: u64, params: TreeParams) -> Result<Tree> {
    let d = check_data(x, y)?;
    if params.min_leaf == 0 {
        return Err(invalid("min_leaf must be at least 1"));
    }
    if x.len() < params.min_leaf {
        return Err(invalid(format!("{} samples is fewer than min_leaf {}", x.len(), params.min_leaf)));
    }
    let n = x.len();
    let mut idx: Vec<usize> = if params.bootstrap {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut g = Grower { x, y, params, nodes: Vec::new(), importance: vec![0.0; d] };
    g.grow(&mut idx, 0);
    Ok(Tree { nodes: g.nodes, importance: g.importance })
}

/// An ensemble of regression trees; the prediction is the mean over trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Trains `params.n_trees` trees in parallel; tree `t` bootstraps with
    /// `child_seed(params.seed, t)`, so the result does not depend on the
    /// thread count.
    pub fn fit(x: &[Vec<f64>], y: &[[f64; N_TARGETS]], feature_names: &[&str], params: ForestParams) -> Result<Self> {
        let d = check_data(x, y)?;
        if feature_names.len() != d {
            return Err(invalid(format!("{} feature names for {d} features", feature_names.len())));
        }
        if params.n_trees == 0 {
            return Err(invalid("a forest needs at least one tree"));
        }
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| train_tree(x, y, child_seed(params.seed, t as u64), params.tree))
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest { params, feature_names: feature_names.iter().map(|s| s.to_string()).collect(), trees })
    }

    /// Assembles a forest from existing trees.
    pub fn from_trees(trees: Vec<Tree>, feature_names: Vec<String>) -> Result<Self> {
        let forest = Forest { params: ForestParams { n_trees: trees.len(), ..Default::default() }, feature_names, trees };
        forest.validate()?;
        Ok(forest)
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.trees.iter().try_for_each(|t| t.validate(self.n_features()))
    }

    pub fn predict(&self, x: &[f64]) -> Result<[f64; N_TARGETS]> {
        if self.trees.is_empty() {
            return Err(Error::State("forest has no trained trees".into()));
        }
        if x.len() != self.n_features() {
            return Err(invalid(format!("expected {} features, got {}", self.n_features(), x.len())));
        }
        let mut sum = [0.0; N_TARGETS];
        for tree in &self.trees {
            let p = tree.predict(x);
            for t in 0..N_TARGETS {
                sum[t] += p[t];
            }
        }
        Ok(sum.map(|s| s / self.trees.len() as f64))
    }

    pub fn predict_many(&self, x: &[Vec<f64>]) -> Result<Vec<[f64; N_TARGETS]>> {
        x.iter().map(|r| self.predict(r)).collect()
    }

    /// Impurity-decrease importance: the squared-error reduction of every
    /// split (which already weights by node sample count), summed per feature
    /// over all trees and normalized to sum to one. A forest without any
    /// split returns all zeros.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features()];
        for tree in &self.trees {
            for (a, b) in imp.iter_mut().zip(&tree.importance) {
                *a += b;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let forest: Forest = serde_json::from_str(text)?;
        forest.validate()?;
        Ok(forest)
    }
}

/// Writes `feature,importance` rows, one per feature.
pub fn write_importance_csv(path: &Path, names: &[String], importance: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "importance"])?;
    for (n, v) in names.iter().zip(importance) {
        w.write_record([n.as_str(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
