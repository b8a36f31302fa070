//! Depth-bounded regression trees with variance-reduction splits, the base
//! learner for natural-gradient boosting.
//!
//! Splits scan every feature in index order with thresholds at midpoints of
//! sorted unique values; only a strictly better variance reduction replaces
//! the incumbent, so ties resolve to the lowest feature index and lowest
//! threshold. Feature order statistics are precomputed once per feature
//! matrix and shared across all stages of a boosting fit.

use serde::{Deserialize, Serialize};

use crate::featurize::{DenseMatrix, FeatureMatrix, Fingerprint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A fitted regression tree. Rows with `value < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, features: &FeatureMatrix, row: usize) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    let v = feature_value(features, row, *feature);
                    node = if v < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn feature_value(features: &FeatureMatrix, row: usize, feature: usize) -> f64 {
    match features {
        FeatureMatrix::Dense(m) => m.row(row)[feature],
        FeatureMatrix::Fingerprints(fps) => f64::from(fps[row].bit(feature)),
    }
}

/// Presorted feature-order index lists, computed once per feature matrix and
/// reused across every tree of a boosting run.
pub struct FeatureIndex {
    layout: Layout,
}

enum Layout {
    /// Per feature: all row indices sorted ascending by value.
    Dense { order: Vec<Vec<usize>>, n_rows: usize },
    /// Per bit: rows where the bit is set (binary features).
    Sparse { on_rows: Vec<Vec<usize>>, n_rows: usize },
}

impl FeatureIndex {
    pub fn build(features: &FeatureMatrix) -> Self {
        match features {
            FeatureMatrix::Dense(m) => FeatureIndex {
                layout: Layout::Dense { order: sort_dense(m), n_rows: m.rows() },
            },
            FeatureMatrix::Fingerprints(fps) => FeatureIndex {
                layout: Layout::Sparse { on_rows: bucket_sparse(fps), n_rows: fps.len() },
            },
        }
    }

    fn n_rows(&self) -> usize {
        match &self.layout {
            Layout::Dense { n_rows, .. } | Layout::Sparse { n_rows, .. } => *n_rows,
        }
    }
}

fn sort_dense(m: &DenseMatrix) -> Vec<Vec<usize>> {
    (0..m.cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..m.rows()).collect();
            idx.sort_by(|&a, &b| m.row(a)[f].total_cmp(&m.row(b)[f]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

fn bucket_sparse(fps: &[Fingerprint]) -> Vec<Vec<usize>> {
    let width = fps.first().map_or(0, Fingerprint::width);
    let mut on_rows = vec![Vec::new(); width];
    for (row, fp) in fps.iter().enumerate() {
        for bit in fp.on_bits() {
            on_rows[bit].push(row);
        }
    }
    on_rows
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Fits a variance-reduction tree of the given depth on `targets`, restricted
/// to `rows`.
pub fn fit_tree(
    features: &FeatureMatrix,
    index: &FeatureIndex,
    targets: &[f64],
    rows: &[usize],
    max_depth: usize,
) -> RegressionTree {
    assert!(!rows.is_empty());
    let mut nodes = Vec::new();
    let mut membership = vec![false; index.n_rows()];
    grow(features, index, targets, rows, max_depth, &mut nodes, &mut membership);
    RegressionTree { nodes }
}

fn grow(
    features: &FeatureMatrix,
    index: &FeatureIndex,
    targets: &[f64],
    rows: &[usize],
    depth_left: usize,
    nodes: &mut Vec<Node>,
    membership: &mut [bool],
) -> usize {
    let sum: f64 = rows.iter().map(|&r| targets[r]).sum();
    let mean = sum / rows.len() as f64;
    if depth_left == 0 || rows.len() < 2 {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    }

    let best = match &index.layout {
        Layout::Dense { order, .. } => best_dense_split(features, order, targets, rows, sum, membership),
        Layout::Sparse { on_rows, .. } => best_sparse_split(on_rows, targets, rows, sum, membership),
    };

    let Some(best) = best else {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| feature_value(features, r, best.feature) < best.threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

    let idx = nodes.len();
    nodes.push(Node::Leaf { value: mean }); // placeholder, patched below
    let left = grow(features, index, targets, &left_rows, depth_left - 1, nodes, membership);
    let right = grow(features, index, targets, &right_rows, depth_left - 1, nodes, membership);
    nodes[idx] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
    idx
}

/// Gain = S_L^2/n_L + S_R^2/n_R - S^2/n (constant-shifted variance
/// reduction; larger is better).
fn split_gain(sum_left: f64, n_left: usize, sum: f64, n: usize) -> f64 {
    let sum_right = sum - sum_left;
    let n_right = n - n_left;
    sum_left * sum_left / n_left as f64 + sum_right * sum_right / n_right as f64
        - sum * sum / n as f64
}

fn best_dense_split(
    features: &FeatureMatrix,
    order: &[Vec<usize>],
    targets: &[f64],
    rows: &[usize],
    sum: f64,
    membership: &mut [bool],
) -> Option<BestSplit> {
    let n = rows.len();
    rows.iter().for_each(|&r| membership[r] = true);
    let mut best: Option<BestSplit> = None;
    for (feature, feat_order) in order.iter().enumerate() {
        let mut sum_left = 0.0;
        let mut n_left = 0usize;
        let mut prev_value: Option<f64> = None;
        for &r in feat_order {
            if !membership[r] {
                continue;
            }
            let value = feature_value(features, r, feature);
            if let Some(pv) = prev_value {
                if value > pv && n_left > 0 && n_left < n {
                    let gain = split_gain(sum_left, n_left, sum, n);
                    let threshold = 0.5 * (pv + value);
                    if best.as_ref().map_or(gain > 1e-12, |b| gain > b.gain + 1e-12) {
                        best = Some(BestSplit { gain, feature, threshold });
                    }
                }
            }
            sum_left += targets[r];
            n_left += 1;
            prev_value = Some(value);
        }
    }
    rows.iter().for_each(|&r| membership[r] = false);
    best
}

fn best_sparse_split(
    on_rows: &[Vec<usize>],
    targets: &[f64],
    rows: &[usize],
    sum: f64,
    membership: &mut [bool],
) -> Option<BestSplit> {
    let n = rows.len();
    rows.iter().for_each(|&r| membership[r] = true);
    let mut best: Option<BestSplit> = None;
    for (feature, bit_rows) in on_rows.iter().enumerate() {
        let mut sum_on = 0.0;
        let mut n_on = 0usize;
        for &r in bit_rows {
            if membership[r] {
                sum_on += targets[r];
                n_on += 1;
            }
        }
        if n_on == 0 || n_on == n {
            continue;
        }
        // Left side is bit = 0 (value < 0.5).
        let gain = split_gain(sum - sum_on, n - n_on, sum, n);
        if best.as_ref().map_or(gain > 1e-12, |b| gain > b.gain + 1e-12) {
            best = Some(BestSplit { gain, feature, threshold: 0.5 });
        }
    }
    rows.iter().for_each(|&r| membership[r] = false);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::Dense(DenseMatrix::from_rows(rows))
    }

    #[test]
    fn single_split_recovers_step_function() {
        let x = dense((0..10).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 }).collect();
        let index = FeatureIndex::build(&x);
        let rows: Vec<usize> = (0..10).collect();
        let tree = fit_tree(&x, &index, &y, &rows, 3);
        for r in 0..10 {
            assert_eq!(tree.predict_row(&x, r), y[r]);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let x = dense((0..64).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let index = FeatureIndex::build(&x);
        let rows: Vec<usize> = (0..64).collect();
        let tree = fit_tree(&x, &index, &y, &rows, 3);
        assert!(tree.depth() <= 3);
    }

    #[test]
    fn constant_targets_yield_single_leaf() {
        let x = dense((0..6).map(|i| vec![i as f64]).collect());
        let y = vec![4.0; 6];
        let index = FeatureIndex::build(&x);
        let rows: Vec<usize> = (0..6).collect();
        let tree = fit_tree(&x, &index, &y, &rows, 3);
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.predict_row(&x, 0), 4.0);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // Both features split the data identically; feature 0 must win.
        let x = dense(vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ]);
        let y = vec![0.0, 0.0, 5.0, 5.0];
        let index = FeatureIndex::build(&x);
        let tree = fit_tree(&x, &index, &y, &[0, 1, 2, 3], 1);
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn sparse_binary_splits() {
        // Fingerprint-style features: bit 7 separates the targets.
        let fps: Vec<Fingerprint> = (0..8)
            .map(|i| {
                let mut bits = vec![3usize];
                if i >= 4 {
                    bits.push(7);
                }
                Fingerprint::from_on_bits(64, &bits)
            })
            .collect();
        let x = FeatureMatrix::Fingerprints(fps);
        let y: Vec<f64> = (0..8).map(|i| if i >= 4 { 2.0 } else { -2.0 }).collect();
        let index = FeatureIndex::build(&x);
        let rows: Vec<usize> = (0..8).collect();
        let tree = fit_tree(&x, &index, &y, &rows, 2);
        for r in 0..8 {
            assert_eq!(tree.predict_row(&x, r), y[r]);
        }
    }

    #[test]
    fn node_subset_fit_ignores_outside_rows() {
        let x = dense((0..10).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (0..10).map(|i| if i < 3 { 1.0 } else { 9.0 }).collect();
        let index = FeatureIndex::build(&x);
        // Fit only on rows 0..3 (constant target there).
        let tree = fit_tree(&x, &index, &y, &[0, 1, 2], 3);
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.predict_row(&x, 9), 1.0);
    }
}
