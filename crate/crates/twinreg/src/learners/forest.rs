//! Random forest of CART regression trees.
//!
//! Each tree is grown on a bootstrap resample. Splits minimize the summed
//! squared error of the two children (variance reduction), thresholds are
//! midpoints between adjacent distinct sorted values, and a random fraction
//! of the features is eligible at every split. Ties are broken toward the
//! lowest feature index, then the lowest threshold, so tree growth is fully
//! deterministic for a given seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Fraction of features eligible per split; the count is
    /// `max(1, floor(fraction * f))`.
    pub max_features: f64,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            max_depth: 16,
            max_features: 1.0,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 || self.max_depth == 0 {
            return Err(Error::invalid("n_estimators and max_depth must be positive"));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::invalid("max_features must lie in (0, 1]"));
        }
        if self.min_samples_leaf == 0 || self.min_samples_split < 2 {
            return Err(Error::invalid(
                "min_samples_leaf must be >= 1 and min_samples_split >= 2",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub feature_count: usize,
    trees: Vec<Tree>,
}

impl ForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of the per-tree predictions, summed in tree order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    /// Thresholds and leaf values count one each; split nodes also store a
    /// feature index.
    pub fn parameter_count(&self) -> u64 {
        self.trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .map(|n| match n {
                Node::Leaf { .. } => 1u64,
                Node::Split { .. } => 2u64,
            })
            .sum()
    }
}

/// Grow a forest. Trees are independent: tree `t` draws everything from
/// `derive(seed, t)`, so the result does not depend on scheduling.
pub fn fit_forest(params: &ForestParams, features: &Matrix, targets: &[f64], seed: u64) -> ForestModel {
    debug_assert!(params.validate().is_ok());
    debug_assert_eq!(features.rows(), targets.len());
    debug_assert!(features.rows() > 0);
    let n = features.rows();
    let f = features.cols();
    let trees: Vec<Tree> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds::rng(seeds::derive(seed, t as u64));
            // Bootstrap: n draws with replacement.
            let slots: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut vals: Vec<Vec<f64>> = vec![Vec::with_capacity(n); f];
            let mut y = Vec::with_capacity(n);
            for &r in &slots {
                let row = features.row(r);
                for (j, v) in row.iter().enumerate() {
                    vals[j].push(*v);
                }
                y.push(targets[r]);
            }
            grow_tree(params, &vals, &y, &mut rng)
        })
        .collect();
    ForestModel {
        params: *params,
        feature_count: f,
        trees,
    }
}

/// Grow one tree on the given samples (`vals` is feature-major: `vals[j][s]`
/// is feature `j` of sample `s`). Exposed within the crate so split logic can
/// be tested without the bootstrap in the way.
pub(crate) fn grow_tree(
    params: &ForestParams,
    vals: &[Vec<f64>],
    y: &[f64],
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n = y.len();
    let f = vals.len();
    let k_features = ((params.max_features * f as f64) as usize).clamp(1, f);
    let mut builder = TreeBuilder {
        params,
        vals,
        y,
        rng,
        k_features,
        nodes: Vec::new(),
        side: vec![false; n],
    };
    // Pre-sorted slot lists per feature; sorting happens once at the root and
    // partitions stay sorted thereafter.
    let lists: Vec<Vec<u32>> = (0..f)
        .map(|j| {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| vals[j][a as usize].total_cmp(&vals[j][b as usize]));
            order
        })
        .collect();
    builder.build(lists, 0);
    Tree {
        nodes: builder.nodes,
    }
}

struct TreeBuilder<'a> {
    params: &'a ForestParams,
    vals: &'a [Vec<f64>],
    y: &'a [f64],
    rng: &'a mut ChaCha8Rng,
    k_features: usize,
    nodes: Vec<Node>,
    /// Slot -> goes-left marker, reused across nodes.
    side: Vec<bool>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> u32 {
        let n = lists[0].len();
        let (mut sum, mut sum2) = (0.0, 0.0);
        for &s in &lists[0] {
            let v = self.y[s as usize];
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let sse = (sum2 - sum * sum / n as f64).max(0.0);

        let idx = self.nodes.len() as u32;
        if depth >= self.params.max_depth
            || n < self.params.min_samples_split
            || n < 2 * self.params.min_samples_leaf
            || sse <= 1e-12
        {
            self.nodes.push(Node::Leaf { value: mean });
            return idx;
        }

        let mut candidates = rand::seq::index::sample(self.rng, lists.len(), self.k_features).into_vec();
        candidates.sort_unstable();

        // Best split: strictly-smaller score wins, and candidates arrive in
        // ascending (feature, threshold) order, which encodes the tie rule.
        let mut best: Option<(f64, usize, f64, usize)> = None; // (score, feature, threshold, left count)
        for &j in &candidates {
            let list = &lists[j];
            let col = &self.vals[j];
            let (mut lsum, mut lsum2) = (0.0, 0.0);
            for k in 0..n - 1 {
                let s = list[k] as usize;
                let v = self.y[s];
                lsum += v;
                lsum2 += v * v;
                let a = col[s];
                let b = col[list[k + 1] as usize];
                if a < b {
                    let cl = (k + 1) as f64;
                    let cr = (n - k - 1) as f64;
                    if (k + 1) < self.params.min_samples_leaf
                        || (n - k - 1) < self.params.min_samples_leaf
                    {
                        continue;
                    }
                    let rsum = sum - lsum;
                    let rsum2 = sum2 - lsum2;
                    let score = (lsum2 - lsum * lsum / cl) + (rsum2 - rsum * rsum / cr);
                    if best.map_or(true, |(bs, ..)| score < bs) {
                        let mut thr = 0.5 * (a + b);
                        // Guard against midpoint rounding up to b, which
                        // would leak b's duplicates into the left child.
                        if !(thr < b) {
                            thr = a;
                        }
                        best = Some((score, j, thr, k + 1));
                    }
                }
            }
        }

        let Some((_, feature, threshold, n_left)) = best else {
            self.nodes.push(Node::Leaf { value: mean });
            return idx;
        };

        for &s in &lists[feature] {
            self.side[s as usize] = self.vals[feature][s as usize] <= threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in &lists {
            let mut l = Vec::with_capacity(n_left);
            let mut r = Vec::with_capacity(n - n_left);
            for &s in list {
                if self.side[s as usize] {
                    l.push(s);
                } else {
                    r.push(s);
                }
            }
            left_lists.push(l);
            right_lists.push(r);
        }
        drop(lists);

        self.nodes.push(Node::Leaf { value: mean }); // placeholder
        let left = self.build(left_lists, depth + 1);
        let right = self.build(right_lists, depth + 1);
        self.nodes[idx as usize] = Node::Split {
            feature: feature as u32,
            threshold,
            left,
            right,
        };
        idx
    }
}
