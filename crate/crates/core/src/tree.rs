//! Regression trees over binned features, grown best-first to a fixed number
//! of terminal nodes.
//!
//! Split quality is measured either with the second-order gain
//!
//! ```text
//! Gain(s) = [Σ_left L']² / Σ_left L'' + [Σ_right L']² / Σ_right L'' − [Σ L']² / Σ L''
//! ```
//!
//! or its first-order counterpart with child counts in the denominators.
//! Only group sums of second derivatives ever appear in a denominator, so
//! rows with near-zero individual weights cannot blow up a gain; candidates
//! whose side weight falls below a small guard are skipped instead.

use alloc::vec;
use alloc::vec::Vec;

use crate::binning::BinnedDataset;

/// Hessian group sums below this are treated as empty sides.
pub const HESS_GUARD: f64 = 1e-12;

/// Magnitude cap for terminal Newton values (scaled by the target range for
/// regression). A leaf whose hessian sum is tiny but nonzero would otherwise
/// take a near-unbounded step and can send training into a runaway
/// oscillation on hard multi-class rows.
pub const LEAF_CLIP: f64 = 50.0;

/// Which gain formula drives split selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// Second derivatives weight the responses; denominators are hessian sums.
    SecondOrder,
    /// First derivatives only; denominators are child counts.
    FirstOrder,
}

/// Per-row first and second derivatives of the loss at the current scores.
/// In first-order mode every second derivative is the sentinel 1.
pub struct WorkingSet<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
}

/// A candidate split: rows with `bin <= threshold_bin` on `feature` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold_bin: u32,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: u32,
        threshold_bin: u32,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// A grown tree. Routing sends `bin <= threshold_bin` left; leaves hold the
/// fitted values set by the boosting stage that owns the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        Self { nodes }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Route a binned row to its leaf value.
    pub fn predict_row(&self, row_bins: &[u32]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Internal {
                    feature,
                    threshold_bin,
                    left,
                    right,
                } => {
                    idx = if row_bins[*feature as usize] <= *threshold_bin {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Leaf index (position among leaves in node order) a row routes to.
    pub fn leaf_of_row(&self, row_bins: &[u32]) -> usize {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { .. } => {
                    return self.nodes[..idx]
                        .iter()
                        .filter(|n| matches!(n, TreeNode::Leaf { .. }))
                        .count();
                }
                TreeNode::Internal {
                    feature,
                    threshold_bin,
                    left,
                    right,
                } => {
                    idx = if row_bins[*feature as usize] <= *threshold_bin {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Output of [`grow`]: the tree shape plus, for each leaf in node order, the
/// training rows it holds. Terminal values are assigned by the caller.
pub struct GrownTree {
    tree: RegressionTree,
    leaf_nodes: Vec<usize>,
    leaf_rows: Vec<Vec<u32>>,
}

impl GrownTree {
    pub fn leaf_rows(&self) -> &[Vec<u32>] {
        &self.leaf_rows
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    /// Set the terminal values (one per leaf, in leaf order) and finish.
    pub fn finish(mut self, values: &[f64]) -> RegressionTree {
        assert_eq!(values.len(), self.leaf_nodes.len());
        for (&node, &v) in self.leaf_nodes.iter().zip(values) {
            self.tree.nodes[node] = TreeNode::Leaf { value: v };
        }
        self.tree
    }
}

/// Second- or first-order split gain from group sums. In first-order mode
/// the two "hess" arguments carry the left child count and the node count.
///
/// Returns `None` when a side is empty under the mode's guard; otherwise the
/// gain clamped to be nonnegative.
pub fn split_gain(
    sum_grad_left: f64,
    sum_hess_left: f64,
    sum_grad_total: f64,
    sum_hess_total: f64,
    mode: GainMode,
) -> Option<f64> {
    let sum_grad_right = sum_grad_total - sum_grad_left;
    let sum_hess_right = sum_hess_total - sum_hess_left;
    match mode {
        GainMode::SecondOrder => {
            if sum_hess_left <= HESS_GUARD || sum_hess_right <= HESS_GUARD {
                return None;
            }
        }
        GainMode::FirstOrder => {
            if sum_hess_left < 1.0 || sum_hess_right < 1.0 {
                return None;
            }
        }
    }
    let gain = sum_grad_left * sum_grad_left / sum_hess_left
        + sum_grad_right * sum_grad_right / sum_hess_right
        - sum_grad_total * sum_grad_total / sum_hess_total;
    Some(gain.max(0.0))
}

struct FeatureHistogram {
    grad: Vec<f64>,
    hess: Vec<f64>,
    count: Vec<u32>,
}

impl FeatureHistogram {
    fn new(capacity: usize) -> Self {
        Self {
            grad: vec![0.0; capacity],
            hess: vec![0.0; capacity],
            count: vec![0; capacity],
        }
    }

    fn reset(&mut self, n_bins: usize) {
        self.grad[..n_bins].fill(0.0);
        self.hess[..n_bins].fill(0.0);
        self.count[..n_bins].fill(0);
    }
}

/// Find the best split for a node over all features and bin thresholds.
///
/// Histograms accumulate per feature in row order; thresholds are scanned
/// left to right. Ties keep the lower feature index, then the lower
/// threshold. Returns `None` when no candidate improves on the node.
pub fn best_split(
    rows: &[u32],
    binned: &BinnedDataset,
    work: &WorkingSet<'_>,
    mode: GainMode,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let mut sum_grad_total = 0.0;
    let mut sum_hess_total = 0.0;
    for &r in rows {
        sum_grad_total += work.grad[r as usize];
        sum_hess_total += work.hess[r as usize];
    }
    let count_total = rows.len() as f64;

    let max_bins = (0..binned.n_features())
        .map(|f| binned.map(f).n_bins() as usize)
        .max()
        .unwrap_or(1);
    let mut hist = FeatureHistogram::new(max_bins);

    let mut best: Option<SplitCandidate> = None;
    for feature in 0..binned.n_features() {
        let n_bins = binned.map(feature).n_bins() as usize;
        if n_bins < 2 {
            continue;
        }
        hist.reset(n_bins);
        let column = binned.column(feature);
        for &r in rows {
            let b = column[r as usize] as usize;
            hist.grad[b] += work.grad[r as usize];
            hist.hess[b] += work.hess[r as usize];
            hist.count[b] += 1;
        }

        let mut left_grad = 0.0;
        let mut left_hess = 0.0;
        let mut left_count = 0u32;
        for threshold in 0..n_bins - 1 {
            left_grad += hist.grad[threshold];
            left_hess += hist.hess[threshold];
            left_count += hist.count[threshold];
            let gain = match mode {
                GainMode::SecondOrder => {
                    split_gain(left_grad, left_hess, sum_grad_total, sum_hess_total, mode)
                }
                GainMode::FirstOrder => split_gain(
                    left_grad,
                    left_count as f64,
                    sum_grad_total,
                    count_total,
                    mode,
                ),
            };
            if let Some(gain) = gain {
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        feature,
                        threshold_bin: threshold as u32,
                        gain,
                    });
                }
            }
        }
    }
    best
}

struct FrontierLeaf {
    node: usize,
    rows: Vec<u32>,
    candidate: Option<SplitCandidate>,
}

/// Grow a tree best-first: repeatedly split the frontier leaf whose best
/// split has the largest gain until `j` leaves exist or nothing improves.
/// Ties keep the earliest-created leaf. Terminal values are left for the
/// caller ([`GrownTree::finish`]).
pub fn grow(
    binned: &BinnedDataset,
    rows: Vec<u32>,
    work: &WorkingSet<'_>,
    j: usize,
    mode: GainMode,
) -> GrownTree {
    assert!(j >= 1, "need at least one terminal node");
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let candidate = best_split(&rows, binned, work, mode);
    let mut frontier = vec![FrontierLeaf {
        node: 0,
        rows,
        candidate,
    }];
    let mut n_leaves = 1usize;

    while n_leaves < j {
        let mut pick: Option<(usize, f64)> = None;
        for (i, leaf) in frontier.iter().enumerate() {
            if let Some(c) = &leaf.candidate {
                if pick.is_none_or(|(_, g)| c.gain > g) {
                    pick = Some((i, c.gain));
                }
            }
        }
        let Some((leaf_idx, _)) = pick else { break };

        // Plain remove keeps the frontier in creation order so gain ties
        // resolve toward the earliest-created leaf.
        let leaf = frontier.remove(leaf_idx);
        let split = leaf.candidate.unwrap();
        let column = binned.column(split.feature);
        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &r in &leaf.rows {
            if column[r as usize] <= split.threshold_bin {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let left_node = nodes.len();
        let right_node = nodes.len() + 1;
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[leaf.node] = TreeNode::Internal {
            feature: split.feature as u32,
            threshold_bin: split.threshold_bin,
            left: left_node as u32,
            right: right_node as u32,
        };

        let left_candidate = best_split(&left_rows, binned, work, mode);
        let right_candidate = best_split(&right_rows, binned, work, mode);
        frontier.push(FrontierLeaf {
            node: left_node,
            rows: left_rows,
            candidate: left_candidate,
        });
        frontier.push(FrontierLeaf {
            node: right_node,
            rows: right_rows,
            candidate: right_candidate,
        });
        n_leaves += 1;
    }

    frontier.sort_unstable_by_key(|leaf| leaf.node);
    let leaf_nodes: Vec<usize> = frontier.iter().map(|l| l.node).collect();
    let leaf_rows: Vec<Vec<u32>> = frontier.into_iter().map(|l| l.rows).collect();
    GrownTree {
        tree: RegressionTree { nodes },
        leaf_nodes,
        leaf_rows,
    }
}
