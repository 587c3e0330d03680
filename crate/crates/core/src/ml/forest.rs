//! Random forest: bootstrapped CART trees with per-split random feature
//! subsets and majority voting.
//!
//! Tree `i` trains from a ChaCha8 stream derived from (master seed, i), so
//! the forest comes out identical whether trees are fitted serially or on
//! the rayon pool.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ml::tree::{TreeBuilder, TreeModel, TreeParams, NUM_CLASSES};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; defaults to floor(sqrt(d)).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeParams,
    /// Train trees on the rayon pool; results are identical either way.
    #[serde(default)]
    pub parallel: bool,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            seed,
            tree: TreeParams::default(),
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub n_trees: usize,
    pub max_features: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree_seeds: Vec<u64>,
}

impl ForestModel {
    /// Majority vote over trees; ties go to the lowest class code.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        let mut votes = [0usize; NUM_CLASSES];
        for tree in &self.trees {
            votes[tree.predict(row)? as usize - 1] += 1;
        }
        let mut best = 0usize;
        for c in 1..NUM_CLASSES {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        Ok((best + 1) as u8)
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<u8>> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }
}

fn fit_one_tree(
    x: &Matrix,
    y: &[u8],
    feature_names: &[String],
    params: &ForestParams,
    max_features: usize,
    tree_seed: u64,
) -> TreeModel {
    let mut rng = rng::seeded(tree_seed);
    let n = x.rows();
    let indices: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let root = TreeBuilder::new(x, y, &params.tree, max_features, Some(&mut rng)).build(&indices);
    TreeModel {
        root,
        feature_names: feature_names.to_vec(),
    }
}

pub fn fit_forest(
    x: &Matrix,
    y: &[u8],
    feature_names: &[String],
    params: &ForestParams,
) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::invalid("fit_forest requires n_trees >= 1"));
    }
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::invalid("fit_forest: empty or inconsistent training set"));
    }
    let d = x.cols();
    let max_features = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
        .clamp(1, d);

    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|i| rng::derive_seed(params.seed, i as u64))
        .collect();

    let fit = |&seed: &u64| fit_one_tree(x, y, feature_names, params, max_features, seed);
    let trees: Vec<TreeModel> = if params.parallel {
        tree_seeds.par_iter().map(fit).collect()
    } else {
        tree_seeds.iter().map(fit).collect()
    };

    Ok(ForestModel {
        trees,
        n_trees: params.n_trees,
        max_features,
        bootstrap: params.bootstrap,
        seed: params.seed,
        tree_seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::tree::fit_tree;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn toy() -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(
            (0..60)
                .map(|i| vec![(i % 10) as f64, (i / 10) as f64, ((i * 13) % 7) as f64])
                .collect(),
        );
        let y: Vec<u8> = (0..60).map(|i| ((i % 10) / 4 + 1).min(3) as u8).collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let (x, y) = toy();
        let params = ForestParams {
            n_trees: 1,
            max_features: Some(3),
            bootstrap: false,
            seed: 11,
            tree: TreeParams::default(),
            parallel: false,
        };
        let forest = fit_forest(&x, &y, &names(3), &params).unwrap();
        let tree = fit_tree(&x, &y, &names(3), &TreeParams::default()).unwrap();
        assert_eq!(forest.trees[0], tree);
        for i in 0..x.rows() {
            assert_eq!(
                forest.predict(x.row(i)).unwrap(),
                tree.predict(x.row(i)).unwrap()
            );
        }
    }

    #[test]
    fn same_seed_reproduces_structures() {
        let (x, y) = toy();
        let params = ForestParams {
            n_trees: 12,
            ..ForestParams::new(5)
        };
        let a = fit_forest(&x, &y, &names(3), &params).unwrap();
        let b = fit_forest(&x, &y, &names(3), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_equals_serial() {
        let (x, y) = toy();
        let mut params = ForestParams {
            n_trees: 16,
            ..ForestParams::new(23)
        };
        let serial = fit_forest(&x, &y, &names(3), &params).unwrap();
        params.parallel = true;
        let parallel = fit_forest(&x, &y, &names(3), &params).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn zero_trees_is_an_error() {
        let (x, y) = toy();
        let params = ForestParams {
            n_trees: 0,
            ..ForestParams::new(1)
        };
        assert!(fit_forest(&x, &y, &names(3), &params).is_err());
    }
}
