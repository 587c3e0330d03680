//! CART decision tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values; the split minimizing weighted child Gini wins, ties broken by
//! lowest feature index then lowest threshold. Trees grow to pure leaves
//! unless depth or minimum-split limits intervene.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::EngineRng;

pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        class: u8,
        samples: usize,
        histogram: [usize; NUM_CLASSES],
    },
    Split {
        feature: usize,
        threshold: f64,
        gini: f64,
        samples: usize,
        histogram: [usize; NUM_CLASSES],
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub feature_names: Vec<String>,
}

impl TreeModel {
    /// Root-to-leaf descent; a value ≤ threshold goes left.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        if row.len() != self.feature_names.len() {
            return Err(Error::invalid(format!(
                "row has {} features, tree expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return Ok(*class),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<u8>> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    /// Feature index and threshold of the root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root {
            TreeNode::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

pub fn gini_of(hist: &[usize; NUM_CLASSES], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - hist
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

fn histogram(y: &[u8], indices: &[usize]) -> [usize; NUM_CLASSES] {
    let mut hist = [0usize; NUM_CLASSES];
    for &i in indices {
        hist[y[i] as usize - 1] += 1;
    }
    hist
}

/// Majority class; ties go to the lowest class code.
fn majority(hist: &[usize; NUM_CLASSES]) -> u8 {
    let mut best = 0usize;
    for c in 1..NUM_CLASSES {
        if hist[c] > hist[best] {
            best = c;
        }
    }
    (best + 1) as u8
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_gini: f64,
}

/// Builder shared by single trees and forest trees; the forest supplies an
/// RNG and a feature budget for per-node random subsets.
pub(crate) struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    params: &'a TreeParams,
    max_features: usize,
    rng: Option<&'a mut EngineRng>,
}

impl<'a> TreeBuilder<'a> {
    pub(crate) fn new(
        x: &'a Matrix,
        y: &'a [u8],
        params: &'a TreeParams,
        max_features: usize,
        rng: Option<&'a mut EngineRng>,
    ) -> Self {
        TreeBuilder {
            x,
            y,
            params,
            max_features,
            rng,
        }
    }

    pub(crate) fn build(&mut self, indices: &[usize]) -> TreeNode {
        self.grow(indices, 0)
    }

    fn grow(&mut self, indices: &[usize], depth: usize) -> TreeNode {
        let hist = histogram(self.y, indices);
        let node_gini = gini_of(&hist, indices.len());
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);

        if pure || depth_capped || indices.len() < self.params.min_samples_split {
            return TreeNode::Leaf {
                class: majority(&hist),
                samples: indices.len(),
                histogram: hist,
            };
        }

        let candidates = self.candidate_features();
        let best = self.best_split(indices, &candidates);
        match best {
            None => TreeNode::Leaf {
                class: majority(&hist),
                samples: indices.len(),
                histogram: hist,
            },
            Some(split) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
                let left = self.grow(&left_idx, depth + 1);
                let right = self.grow(&right_idx, depth + 1);
                TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    gini: node_gini,
                    samples: indices.len(),
                    histogram: hist,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
        }
    }

    /// Features examined at this node: all of them, or a random subset of
    /// `max_features` drawn without replacement when an RNG is present.
    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        if self.max_features >= d || self.rng.is_none() {
            return (0..d).collect();
        }
        let rng = self.rng.as_deref_mut().expect("checked above");
        let mut pool: Vec<usize> = (0..d).collect();
        // partial Fisher-Yates: first max_features entries form the sample
        for i in 0..self.max_features {
            let j = rand::Rng::gen_range(rng, i..d);
            pool.swap(i, j);
        }
        let mut chosen = pool[..self.max_features].to_vec();
        chosen.sort_unstable();
        chosen
    }

    fn best_split(&self, indices: &[usize], features: &[usize]) -> Option<BestSplit> {
        let n = indices.len() as f64;
        let total_hist = histogram(self.y, indices);
        let mut best: Option<BestSplit> = None;

        for &feature in features {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.x
                    .get(a, feature)
                    .partial_cmp(&self.x.get(b, feature))
                    .expect("finite feature values")
            });

            let mut left_hist = [0usize; NUM_CLASSES];
            let mut left_n = 0usize;
            for w in 0..order.len() - 1 {
                let i = order[w];
                left_hist[self.y[i] as usize - 1] += 1;
                left_n += 1;

                let v = self.x.get(i, feature);
                let v_next = self.x.get(order[w + 1], feature);
                if v == v_next {
                    continue;
                }
                let threshold = (v + v_next) / 2.0;

                let mut right_hist = [0usize; NUM_CLASSES];
                for c in 0..NUM_CLASSES {
                    right_hist[c] = total_hist[c] - left_hist[c];
                }
                let right_n = indices.len() - left_n;
                let weighted = (left_n as f64 * gini_of(&left_hist, left_n)
                    + right_n as f64 * gini_of(&right_hist, right_n))
                    / n;

                // strict improvement keeps the lowest (feature, threshold)
                // on ties, because iteration is ascending in both
                let better = match &best {
                    None => true,
                    Some(b) => weighted < b.weighted_gini,
                };
                if better {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        weighted_gini: weighted,
                    });
                }
            }
        }
        best
    }
}

/// Fit a CART tree on the full feature set.
pub fn fit_tree(
    x: &Matrix,
    y: &[u8],
    feature_names: &[String],
    params: &TreeParams,
) -> Result<TreeModel> {
    if x.rows() == 0 {
        return Err(Error::invalid("fit_tree requires a non-empty training set"));
    }
    if x.rows() != y.len() {
        return Err(Error::invalid("fit_tree: x and y disagree on n"));
    }
    if x.cols() != feature_names.len() {
        return Err(Error::invalid("fit_tree: feature name count mismatch"));
    }
    let indices: Vec<usize> = (0..x.rows()).collect();
    let root = TreeBuilder::new(x, y, params, x.cols(), None).build(&indices);
    Ok(TreeModel {
        root,
        feature_names: feature_names.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn single_class_input_is_a_single_pure_leaf() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let y = vec![2u8, 2, 2];
        let model = fit_tree(&x, &y, &names(1), &TreeParams::default()).unwrap();
        assert_eq!(model.depth(), 0);
        match &model.root {
            TreeNode::Leaf { class, samples, histogram } => {
                assert_eq!(*class, 2);
                assert_eq!(*samples, 3);
                assert_eq!(gini_of(histogram, *samples), 0.0);
            }
            _ => panic!("expected leaf"),
        }
    }

    #[test]
    fn xor_pattern_needs_depth_two() {
        let x = Matrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ]);
        let y = vec![1u8, 2, 2, 1];
        let model = fit_tree(&x, &y, &names(2), &TreeParams::default()).unwrap();
        assert_eq!(model.depth(), 2);
        for i in 0..4 {
            assert_eq!(model.predict(x.row(i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn purity_grown_tree_memorizes_training_data() {
        let x = Matrix::from_rows(vec![
            vec![1.0, 5.0],
            vec![2.0, 4.0],
            vec![3.0, 3.0],
            vec![4.0, 2.0],
            vec![5.0, 1.0],
            vec![6.0, 9.0],
        ]);
        let y = vec![1u8, 1, 2, 2, 3, 3];
        let model = fit_tree(&x, &y, &names(2), &TreeParams::default()).unwrap();
        assert_eq!(model.predict_all(&x).unwrap(), y);
    }

    #[test]
    fn identical_features_mixed_labels_become_majority_leaf() {
        let x = Matrix::from_rows(vec![vec![1.0]; 5]);
        let y = vec![3u8, 2, 2, 3, 2];
        let model = fit_tree(&x, &y, &names(1), &TreeParams::default()).unwrap();
        assert_eq!(model.depth(), 0);
        assert_eq!(model.predict(&[1.0]).unwrap(), 2);
    }

    #[test]
    fn tie_on_majority_goes_to_lowest_code() {
        let x = Matrix::from_rows(vec![vec![1.0]; 4]);
        let y = vec![3u8, 1, 3, 1];
        let model = fit_tree(&x, &y, &names(1), &TreeParams::default()).unwrap();
        assert_eq!(model.predict(&[1.0]).unwrap(), 1);
    }

    #[test]
    fn thresholds_are_midpoints() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![4.0], vec![8.0]]);
        let y = vec![1u8, 1, 2, 2];
        let model = fit_tree(&x, &y, &names(1), &TreeParams::default()).unwrap();
        let (feature, threshold) = model.root_split().unwrap();
        assert_eq!(feature, 0);
        assert_eq!(threshold, 3.0); // midpoint of 2 and 4
    }

    #[test]
    fn max_depth_limits_growth() {
        let x = Matrix::from_rows((0..16).map(|i| vec![i as f64]).collect());
        let y: Vec<u8> = (0..16).map(|i| (i % 3 + 1) as u8).collect();
        let params = TreeParams {
            max_depth: Some(2),
            min_samples_split: 2,
        };
        let model = fit_tree(&x, &y, &names(1), &params).unwrap();
        assert!(model.depth() <= 2);
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let y = vec![1u8, 2];
        let model = fit_tree(&x, &y, &names(2), &TreeParams::default()).unwrap();
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn split_gini_never_exceeds_parent() {
        let x = Matrix::from_rows(
            (0..30)
                .map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64])
                .collect(),
        );
        let y: Vec<u8> = (0..30).map(|i| (i % 3 + 1) as u8).collect();
        let model = fit_tree(&x, &y, &names(2), &TreeParams::default()).unwrap();

        fn check(node: &TreeNode) {
            if let TreeNode::Split {
                gini,
                samples,
                left,
                right,
                ..
            } = node
            {
                let child_gini = |n: &TreeNode| match n {
                    TreeNode::Leaf { samples, histogram, .. } => {
                        (gini_of(histogram, *samples), *samples)
                    }
                    TreeNode::Split { gini, samples, .. } => (*gini, *samples),
                };
                let (gl, nl) = child_gini(left);
                let (gr, nr) = child_gini(right);
                let weighted = (nl as f64 * gl + nr as f64 * gr) / *samples as f64;
                assert!(
                    weighted <= gini + 1e-12,
                    "weighted child gini {weighted} > parent {gini}"
                );
                check(left);
                check(right);
            }
        }
        check(&model.root);
    }
}
