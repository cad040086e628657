//! Least-squares CART over binary (one-hot) inputs.
//!
//! Every candidate split thresholds a column at 0.5: rows with a 0 go left,
//! rows with a 1 go right. Split quality is the reduction in the sum of
//! squared errors, `n_l * n_r / n * (mean_l - mean_r)^2`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::EncodedMatrix;
use crate::error::{Error, Result};
use crate::stats::mean_at;

use super::GbtParams;

/// Threshold used by every split on a binary column.
pub const BINARY_THRESHOLD: f64 = 0.5;

/// Splits whose SSE reduction is below this fraction of the node's SSE are
/// treated as rounding noise.
const RELATIVE_GAIN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Variance reduction at this node (unweighted by node size).
        impurity_decrease: f64,
        n_samples: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match *self {
            TreeNode::Split { n_samples, .. } | TreeNode::Leaf { n_samples, .. } => n_samples,
        }
    }
}

/// A fitted tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    /// Maximum number of splits on any root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Index of the leaf that `row` falls into.
    pub fn leaf_index(&self, row: &[u8]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if f64::from(row[column]) <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict_row(&self, row: &[u8]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub(crate) fn set_leaf_value(&mut self, node: usize, new_value: f64) {
        if let TreeNode::Leaf { value, .. } = &mut self.nodes[node] {
            *value = new_value;
        }
    }
}

/// Fits a least-squares regression tree on all rows of `x`.
pub fn fit_tree(x: &EncodedMatrix, targets: &[f64], params: &GbtParams) -> Result<Tree> {
    if x.n_rows() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: targets.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    params.validate()?;
    let samples: Vec<usize> = (0..x.n_rows()).collect();
    Ok(grow(x, targets, samples, params).0)
}

/// Grows a tree on `samples` and also returns, for every leaf, the samples
/// routed to it.
pub(crate) fn grow(
    x: &EncodedMatrix,
    targets: &[f64],
    samples: Vec<usize>,
    params: &GbtParams,
) -> (Tree, Vec<(usize, Vec<usize>)>) {
    let mut builder = Builder {
        x,
        targets,
        params,
        nodes: Vec::new(),
        leaves: Vec::new(),
        right_sum: alloc::vec![0.0; x.n_columns()],
        right_count: alloc::vec![0; x.n_columns()],
    };
    builder.build(samples, 0);
    (
        Tree {
            nodes: builder.nodes,
        },
        builder.leaves,
    )
}

struct Builder<'a> {
    x: &'a EncodedMatrix,
    targets: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<TreeNode>,
    leaves: Vec<(usize, Vec<usize>)>,
    right_sum: Vec<f64>,
    right_count: Vec<usize>,
}

struct Candidate {
    column: usize,
    gain: f64,
}

impl Builder<'_> {
    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = samples.len();
        let value = mean_at(self.targets, &samples);
        self.nodes.push(TreeNode::Leaf { value, n_samples: n });

        let splittable = depth < self.params.max_depth
            && n >= self.params.min_samples_split
            && n >= 2 * self.params.min_samples_leaf;
        if !splittable {
            self.leaves.push((id, samples));
            return id;
        }
        let Some(best) = self.best_split(&samples, value) else {
            self.leaves.push((id, samples));
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| f64::from(self.x.get(i, best.column)) <= BINARY_THRESHOLD);
        drop(samples);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            column: best.column,
            threshold: BINARY_THRESHOLD,
            left,
            right,
            impurity_decrease: best.gain / n as f64,
            n_samples: n,
        };
        id
    }

    /// Highest-gain admissible split; ties keep the lowest column index.
    fn best_split(&mut self, samples: &[usize], node_mean: f64) -> Option<Candidate> {
        let n = samples.len();
        let mut sse = 0.0;
        let mut total = 0.0;
        self.right_sum.iter_mut().for_each(|s| *s = 0.0);
        self.right_count.iter_mut().for_each(|c| *c = 0);
        for &i in samples {
            // Centering keeps the sums well conditioned.
            let t = self.targets[i] - node_mean;
            sse += t * t;
            total += t;
            for (c, &v) in self.x.row(i).iter().enumerate() {
                if v != 0 {
                    self.right_sum[c] += t;
                    self.right_count[c] += 1;
                }
            }
        }
        if sse == 0.0 {
            return None;
        }

        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        for c in 0..self.right_sum.len() {
            let n_right = self.right_count[c];
            let n_left = n - n_right;
            if n_right < min_leaf || n_left < min_leaf || n_right == 0 || n_left == 0 {
                continue;
            }
            let mean_right = self.right_sum[c] / n_right as f64;
            let mean_left = (total - self.right_sum[c]) / n_left as f64;
            let diff = mean_left - mean_right;
            let gain = (n_left as f64) * (n_right as f64) / n as f64 * diff * diff;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate { column: c, gain });
            }
        }
        best.filter(|b| b.gain > RELATIVE_GAIN_FLOOR * sse)
    }
}
