//! From-scratch model implementations: seeded train/test split, CART
//! decision tree, random forest, PCA via Jacobi rotations, one-vs-rest
//! linear SVM, and K-means with cluster-to-class mapping.
//!
//! Every fit is deterministic given its seed; sub-tasks derive their own
//! ChaCha8 streams so parallel training reproduces serial results exactly.

pub mod forest;
pub mod kmeans;
pub mod pca;
pub mod svm;
pub mod tree;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use kmeans::{fit_kmeans, map_clusters, ClusterMapping, KMeansModel, KMeansParams};
pub use pca::{fit_pca, PcaModel};
pub use svm::{fit_svm, hinge_objective, SvmModel, SvmParams};
pub use tree::{fit_tree, TreeModel, TreeNode, TreeParams};

/// Seeded 70/30 (by default) partition of row indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub seed: u64,
    pub ratio: f64,
    pub stratified: bool,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train_class_counts: [usize; 3],
    pub test_class_counts: [usize; 3],
}

fn class_counts(y: &[u8], indices: &[usize]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for &i in indices {
        counts[y[i] as usize - 1] += 1;
    }
    counts
}

/// Plain shuffled split: a uniform random permutation under the seed, with
/// the first round(ratio·n) indices forming the training side. Not
/// stratified; per-class proportions drift with the draw.
pub fn split(m: &FeatureMatrix, ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::invalid("split ratio must be in (0, 1)"));
    }
    let n = m.n();
    if n < 2 {
        return Err(Error::invalid("split requires at least 2 rows"));
    }
    let train_len = (ratio * n as f64).round() as usize;
    if train_len == 0 || train_len == n {
        return Err(Error::invalid("split ratio leaves one side empty"));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(seed);
    perm.shuffle(&mut rng);

    let train_indices = perm[..train_len].to_vec();
    let test_indices = perm[train_len..].to_vec();
    Ok(SplitResult {
        seed,
        ratio,
        stratified: false,
        train_class_counts: class_counts(&m.y, &train_indices),
        test_class_counts: class_counts(&m.y, &test_indices),
        train_indices,
        test_indices,
    })
}

/// Stratified variant: shuffles within each class and takes round(ratio·n_c)
/// of each, so per-class proportions match the ratio as closely as rounding
/// allows.
pub fn split_stratified(m: &FeatureMatrix, ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::invalid("split ratio must be in (0, 1)"));
    }
    if m.n() < 2 {
        return Err(Error::invalid("split requires at least 2 rows"));
    }
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for class in 1..=3u8 {
        let mut members: Vec<usize> = (0..m.n()).filter(|&i| m.y[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let mut rng = rng::derived(seed, class as u64);
        members.shuffle(&mut rng);
        let take = (ratio * members.len() as f64).round() as usize;
        train_indices.extend_from_slice(&members[..take]);
        test_indices.extend_from_slice(&members[take..]);
    }
    if train_indices.is_empty() || test_indices.is_empty() {
        return Err(Error::invalid("split ratio leaves one side empty"));
    }
    Ok(SplitResult {
        seed,
        ratio,
        stratified: true,
        train_class_counts: class_counts(&m.y, &train_indices),
        test_class_counts: class_counts(&m.y, &test_indices),
        train_indices,
        test_indices,
    })
}

/// Versioned serialization envelope for every trained model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format_version: u32,
    #[serde(flatten)]
    pub payload: ModelPayload,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum ModelPayload {
    DecisionTree(TreeModel),
    RandomForest(ForestModel),
    PcaSvm(PcaSvmModel),
    KMeans(KMeansModel),
}

/// PCA projection paired with the SVM trained in its 2-D space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSvmModel {
    pub pca: PcaModel,
    pub svm: SvmModel,
}

impl SavedModel {
    pub fn new(payload: ModelPayload) -> Self {
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<SavedModel> {
        let model: SavedModel = serde_json::from_str(json)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {} (expected {})",
                model.format_version, MODEL_FORMAT_VERSION
            )));
        }
        Ok(model)
    }
}
