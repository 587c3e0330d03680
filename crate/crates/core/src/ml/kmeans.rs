//! K-means with k-means++ seeding and Lloyd iterations, plus the two
//! cluster-to-class mappings used for evaluation.
//!
//! `raw` maps cluster index i to class code i+1 — no relabeling, which is
//! what produces the near-zero accuracies reported for clustering on this
//! problem. `majority` relabels each cluster to its modal true class.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ml::tree::NUM_CLASSES;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(seed: u64) -> Self {
        KMeansParams {
            k: 3,
            max_iter: 300,
            tol: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    /// Final sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_curve: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest cluster index.
fn nearest(row: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = sq_dist(row, centroids.row(0));
    for c in 1..centroids.rows() {
        let d = sq_dist(row, centroids.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn kmeans_pp_init(x: &Matrix, k: usize, rng: &mut rng::EngineRng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());

    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));

    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(x.row(i), centroids.row(0)))
        .collect();

    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // all remaining mass at distance zero (duplicate points)
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(chosen));
        for i in 0..n {
            let d = sq_dist(x.row(i), centroids.row(c));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Lloyd iterations from the given initial centroids.
pub fn lloyd_from(x: &Matrix, mut centroids: Matrix, params: &KMeansParams) -> KMeansModel {
    let n = x.rows();
    let k = centroids.rows();
    let d = x.cols();

    let mut assignments = vec![0usize; n];
    let mut inertia_curve = Vec::new();
    let mut iterations = 0usize;

    for _ in 0..params.max_iter {
        iterations += 1;

        // assignment step
        let mut inertia = 0.0;
        for i in 0..n {
            let (c, dist) = nearest(x.row(i), &centroids);
            assignments[i] = c;
            inertia += dist;
        }
        inertia_curve.push(inertia);

        // update step
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for j in 0..d {
                sums.set(c, j, sums.get(c, j) + x.get(i, j));
            }
        }

        let mut shift: f64 = 0.0;
        let mut reseeded = Vec::new();
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster to the worst-fit point
                let far = (0..n)
                    .filter(|i| !reseeded.contains(i))
                    .max_by(|&a, &b| {
                        let da = sq_dist(x.row(a), centroids.row(assignments[a]));
                        let db = sq_dist(x.row(b), centroids.row(assignments[b]));
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("n >= k");
                reseeded.push(far);
                shift = f64::INFINITY; // force another pass
                centroids.row_mut(c).copy_from_slice(x.row(far));
                continue;
            }
            let mut moved = 0.0;
            for j in 0..d {
                let new = sums.get(c, j) / counts[c] as f64;
                let delta = new - centroids.get(c, j);
                moved += delta * delta;
                centroids.set(c, j, new);
            }
            shift = shift.max(moved.sqrt());
        }

        if shift < params.tol {
            break;
        }
    }

    // final inertia against the converged centroids
    let inertia = (0..n)
        .map(|i| sq_dist(x.row(i), centroids.row(assignments[i])))
        .sum();

    KMeansModel {
        k,
        centroids,
        assignments,
        inertia,
        inertia_curve,
        iterations,
    }
}

pub fn fit_kmeans(x: &Matrix, params: &KMeansParams) -> Result<KMeansModel> {
    if params.k == 0 {
        return Err(Error::invalid("fit_kmeans requires k >= 1"));
    }
    if x.rows() < params.k {
        return Err(Error::invalid(format!(
            "fit_kmeans: n = {} smaller than k = {}",
            x.rows(),
            params.k
        )));
    }
    let mut rng = rng::seeded(params.seed);
    let centroids = kmeans_pp_init(x, params.k, &mut rng);
    Ok(lloyd_from(x, centroids, params))
}

/// How clusters are turned into class predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMapping {
    /// Cluster i → class code i+1, no relabeling.
    Raw,
    /// Each cluster → its modal true class.
    Majority,
}

/// Map clusters to class codes. Returns a vector indexed by cluster.
pub fn map_clusters(model: &KMeansModel, y: &[u8], mode: ClusterMapping) -> Result<Vec<u8>> {
    if model.assignments.len() != y.len() {
        return Err(Error::invalid("map_clusters: assignments and labels disagree on n"));
    }
    match mode {
        ClusterMapping::Raw => {
            if model.k != NUM_CLASSES {
                return Err(Error::invalid(format!(
                    "raw mapping needs k = {} clusters, got {}",
                    NUM_CLASSES, model.k
                )));
            }
            Ok((1..=NUM_CLASSES as u8).collect())
        }
        ClusterMapping::Majority => {
            let mut mapping = Vec::with_capacity(model.k);
            for c in 0..model.k {
                let mut hist = [0usize; NUM_CLASSES];
                for (i, &a) in model.assignments.iter().enumerate() {
                    if a == c {
                        hist[y[i] as usize - 1] += 1;
                    }
                }
                let mut best = 0usize;
                for class in 1..NUM_CLASSES {
                    if hist[class] > hist[best] {
                        best = class;
                    }
                }
                mapping.push((best + 1) as u8);
            }
            Ok(mapping)
        }
    }
}

/// Predicted class per point under a cluster→class mapping.
pub fn mapped_predictions(model: &KMeansModel, mapping: &[u8]) -> Vec<u8> {
    model.assignments.iter().map(|&c| mapping[c]).collect()
}
