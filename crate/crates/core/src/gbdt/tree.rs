//! Least-squares regression trees grown best-first over binned features.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// A regression tree; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Feature matrix with every value replaced by its rank among the
/// feature's distinct values, so one histogram bin per distinct value
/// reproduces an exact greedy split search.
#[derive(Debug, Clone)]
pub(crate) struct BinnedMatrix {
    rows: usize,
    features: usize,
    /// Row-major bin codes.
    codes: Vec<u32>,
    /// Sorted distinct values per feature.
    uniques: Vec<Vec<f64>>,
    /// Start of each feature's bins in a flat histogram.
    offsets: Vec<usize>,
    total_bins: usize,
}

impl BinnedMatrix {
    pub(crate) fn new<R: AsRef<[f64]>>(rows: &[R], features: usize) -> BinnedMatrix {
        let mut uniques = Vec::with_capacity(features);
        for f in 0..features {
            let mut values: Vec<f64> = rows.iter().map(|r| r.as_ref()[f]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            uniques.push(values);
        }
        let mut codes = Vec::with_capacity(rows.len() * features);
        for row in rows {
            for (f, &x) in row.as_ref().iter().enumerate() {
                let bin = uniques[f].binary_search_by(|u: &f64| u.total_cmp(&x)).unwrap_or_else(|i| i);
                codes.push(bin as u32);
            }
        }
        let mut offsets = Vec::with_capacity(features);
        let mut total_bins = 0;
        for u in &uniques {
            offsets.push(total_bins);
            total_bins += u.len();
        }
        BinnedMatrix { rows: rows.len(), features, codes, uniques, offsets, total_bins }
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    fn code(&self, row: usize, feature: usize) -> usize {
        self.codes[row * self.features + feature] as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct GrowParams {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    /// Rows with bin code `<= last_left` go left.
    last_left: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    sum: f64,
    count: u32,
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    sum: f64,
    hist: Vec<Bin>,
    best: Option<Candidate>,
}

/// Minimum gain for a split to be taken.
const MIN_GAIN: f64 = 1e-12;

/// Fits a tree to `targets` by least squares, splitting the leaf with the
/// largest gain first. Ties go to the earliest leaf, then the lowest
/// feature index, then the lowest threshold. Returns the tree and each
/// row's leaf value.
pub(crate) fn grow(data: &BinnedMatrix, targets: &[f64], params: GrowParams) -> (Tree, Vec<f64>) {
    let all: Vec<u32> = (0..data.rows() as u32).collect();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let root_hist = histogram(data, targets, &all);
    let root_sum = all.iter().map(|&r| targets[r as usize]).sum();
    let mut leaves = vec![Leaf { node: 0, rows: all, sum: root_sum, hist: root_hist, best: None }];
    leaves[0].best = best_split(data, &leaves[0], params.min_samples_leaf);

    while leaves.len() < params.max_leaves {
        let mut pick: Option<(usize, f64)> = None;
        for (i, leaf) in leaves.iter().enumerate() {
            if let Some(c) = leaf.best {
                if pick.is_none_or(|(_, g)| c.gain > g) {
                    pick = Some((i, c.gain));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let parent = leaves.remove(i);
        let split = parent.best.expect("picked leaf has a split");
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            parent.rows.iter().partition(|&&r| data.code(r as usize, split.feature) <= split.last_left);

        // histogram the smaller child and derive the other by subtraction
        let left_smaller = left_rows.len() <= right_rows.len();
        let small_hist = histogram(data, targets, if left_smaller { &left_rows } else { &right_rows });
        let large_hist: Vec<Bin> = parent
            .hist
            .iter()
            .zip(&small_hist)
            .map(|(p, s)| Bin { sum: p.sum - s.sum, count: p.count - s.count })
            .collect();
        let (left_hist, right_hist) = if left_smaller { (small_hist, large_hist) } else { (large_hist, small_hist) };

        let left_node = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[parent.node] =
            TreeNode::Split { feature: split.feature, threshold: split.threshold, left: left_node, right: left_node + 1 };

        let left_sum = left_rows.iter().map(|&r| targets[r as usize]).sum();
        let right_sum = right_rows.iter().map(|&r| targets[r as usize]).sum();
        let mut left = Leaf { node: left_node, rows: left_rows, sum: left_sum, hist: left_hist, best: None };
        let mut right = Leaf { node: left_node + 1, rows: right_rows, sum: right_sum, hist: right_hist, best: None };
        left.best = best_split(data, &left, params.min_samples_leaf);
        right.best = best_split(data, &right, params.min_samples_leaf);
        // creation order, so gain ties go to the older leaf
        leaves.push(left);
        leaves.push(right);
    }

    let mut fitted = vec![0.0; data.rows()];
    for leaf in &leaves {
        let value = leaf.sum / leaf.rows.len() as f64;
        nodes[leaf.node] = TreeNode::Leaf { value };
        for &r in &leaf.rows {
            fitted[r as usize] = value;
        }
    }
    (Tree { nodes }, fitted)
}

fn histogram(data: &BinnedMatrix, targets: &[f64], rows: &[u32]) -> Vec<Bin> {
    let mut hist = vec![Bin::default(); data.total_bins];
    for &r in rows {
        let r = r as usize;
        let t = targets[r];
        for f in 0..data.features {
            let bin = &mut hist[data.offsets[f] + data.code(r, f)];
            bin.sum += t;
            bin.count += 1;
        }
    }
    hist
}

fn best_split(data: &BinnedMatrix, leaf: &Leaf, min_samples_leaf: usize) -> Option<Candidate> {
    let n = leaf.rows.len();
    let min = min_samples_leaf.max(1);
    if n < 2 * min {
        return None;
    }
    let total = leaf.sum;
    let parent_score = total * total / n as f64;
    let mut best: Option<Candidate> = None;
    for f in 0..data.features {
        let bins = &leaf.hist[data.offsets[f]..data.offsets[f] + data.uniques[f].len()];
        let mut left_sum = 0.0;
        let mut left_count = 0usize;
        let mut prev: Option<usize> = None;
        for (b, bin) in bins.iter().enumerate() {
            if bin.count == 0 {
                continue;
            }
            if let Some(p) = prev {
                let right_count = n - left_count;
                if left_count >= min && right_count >= min {
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / left_count as f64 + right_sum * right_sum / right_count as f64
                        - parent_score;
                    if gain > MIN_GAIN && best.is_none_or(|c| gain > c.gain) {
                        let u = &data.uniques[f];
                        best = Some(Candidate { gain, feature: f, last_left: p, threshold: midpoint(u[p], u[b]) });
                    }
                }
            }
            left_sum += bin.sum;
            left_count += bin.count as usize;
            prev = Some(b);
        }
    }
    best
}

/// A threshold strictly between `lo` and `hi` that `lo` does not exceed.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_leaves: usize, min_samples_leaf: usize) -> GrowParams {
        GrowParams { max_leaves, min_samples_leaf }
    }

    #[test]
    fn single_split_on_step() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let targets: Vec<f64> = (0..10).map(|i| if i < 4 { -1.0 } else { 2.0 }).collect();
        let data = BinnedMatrix::new(&rows, 2);
        let (tree, fitted) = grow(&data, &targets, params(2, 1));
        assert_eq!(tree.nodes[0], TreeNode::Split { feature: 0, threshold: 3.5, left: 1, right: 2 });
        assert_eq!(fitted, targets);
        for (row, t) in rows.iter().zip(&targets) {
            assert_eq!(tree.predict(row), *t);
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = (0..10).map(|i| if i == 0 { 5.0 } else { 0.0 }).collect();
        let data = BinnedMatrix::new(&rows, 1);
        let (tree, _) = grow(&data, &targets, params(8, 3));
        let mut counts = vec![0usize; tree.nodes.len()];
        for row in &rows {
            let mut at = 0;
            while let TreeNode::Split { feature, threshold, left, right } = tree.nodes[at] {
                at = if row[feature] <= threshold { left } else { right };
            }
            counts[at] += 1;
        }
        for (i, node) in tree.nodes.iter().enumerate() {
            if matches!(node, TreeNode::Leaf { .. }) {
                assert!(counts[i] >= 3);
            }
        }
    }

    #[test]
    fn constant_targets_give_one_leaf() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let data = BinnedMatrix::new(&rows, 1);
        let (tree, fitted) = grow(&data, &[0.25; 30], params(31, 1));
        assert_eq!(tree.nodes, [TreeNode::Leaf { value: 0.25 }]);
        assert!(fitted.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn fitted_values_match_prediction() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 17) as f64]).collect();
        let targets: Vec<f64> = rows.iter().map(|r| (r[0] - 6.0) * (r[1] - 8.0)).collect();
        let data = BinnedMatrix::new(&rows, 2);
        let (tree, fitted) = grow(&data, &targets, params(31, 5));
        assert!(tree.leaf_count() > 2 && tree.leaf_count() <= 31);
        for (row, f) in rows.iter().zip(&fitted) {
            assert_eq!(tree.predict(row), *f);
        }
    }

    #[test]
    fn midpoint_separates_neighbors() {
        let lo = 1.0_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }
}
