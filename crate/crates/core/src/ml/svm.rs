//! One-vs-rest linear soft-margin SVM trained by epoch-ordered subgradient
//! descent on the regularized hinge loss.
//!
//! The subgradient method is not a descent method, so each epoch is
//! accepted only if it did not increase the full objective; otherwise the
//! epoch is retried from its starting weights with the learning rate
//! halved. The recorded epoch-boundary objective is therefore
//! non-increasing by construction, and training stays deterministic: the
//! shuffle for epoch e is derived from (seed, class, e) and does not depend
//! on retries.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Soft-margin strength; the ridge term is λ = 1/(C·n).
    pub c: f64,
    pub epochs: usize,
    /// Initial learning rate; halved whenever an epoch fails to descend.
    pub lr0: f64,
    pub seed: u64,
}

impl SvmParams {
    pub fn new(seed: u64) -> Self {
        SvmParams {
            c: 1.0,
            epochs: 200,
            lr0: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Class codes in training order (always [1, 2, 3]).
    pub class_codes: Vec<u8>,
    /// One weight vector per class, in the projected feature space.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: SvmParams,
    /// Full-objective value at each epoch boundary, per class, starting
    /// with the initial weights. Non-increasing by construction.
    pub epoch_objectives: Vec<Vec<f64>>,
}

impl SvmModel {
    pub fn decision_values(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
            .collect()
    }

    /// argmax of decision values; ties go to the lowest class code.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let values = self.decision_values(row);
        let mut best = 0usize;
        for i in 1..values.len() {
            if values[i] > values[best] {
                best = i;
            }
        }
        self.class_codes[best]
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<u8> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }
}

/// Regularized hinge objective: λ/2·‖w‖² + mean_i max(0, 1 − y_i(w·x_i+b)).
pub fn hinge_objective(x: &Matrix, y_signed: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.rows();
    let mut loss = 0.0;
    for i in 0..n {
        let margin = y_signed[i]
            * (x.row(i).iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>() + b);
        loss += (1.0 - margin).max(0.0);
    }
    let reg: f64 = w.iter().map(|wi| wi * wi).sum::<f64>() * lambda / 2.0;
    reg + loss / n as f64
}

fn run_epoch(
    x: &Matrix,
    y_signed: &[f64],
    order: &[usize],
    w: &mut [f64],
    b: &mut f64,
    lr: f64,
    lambda: f64,
) {
    for &i in order {
        let row = x.row(i);
        let margin = y_signed[i]
            * (row.iter().zip(w.iter()).map(|(xi, wi)| xi * wi).sum::<f64>() + *b);
        if margin < 1.0 {
            for (wj, xj) in w.iter_mut().zip(row) {
                *wj -= lr * (lambda * *wj - y_signed[i] * xj);
            }
            *b += lr * y_signed[i];
        } else {
            for wj in w.iter_mut() {
                *wj -= lr * lambda * *wj;
            }
        }
    }
}

fn fit_binary(
    x: &Matrix,
    y_signed: &[f64],
    params: &SvmParams,
    class_seed: u64,
) -> (Vec<f64>, f64, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let lambda = 1.0 / (params.c * n as f64);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut lr = params.lr0;
    let mut objectives = Vec::with_capacity(params.epochs + 1);
    let mut current = hinge_objective(x, y_signed, &w, b, lambda);
    objectives.push(current);

    const MIN_LR: f64 = 1e-14;

    for epoch in 0..params.epochs {
        if lr < MIN_LR {
            // steps too small to change anything; objective stays put
            objectives.push(current);
            continue;
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut epoch_rng = rng::derived(class_seed, epoch as u64);
        order.shuffle(&mut epoch_rng);

        loop {
            let mut w_try = w.clone();
            let mut b_try = b;
            run_epoch(x, y_signed, &order, &mut w_try, &mut b_try, lr, lambda);
            let obj = hinge_objective(x, y_signed, &w_try, b_try, lambda);
            if obj <= current {
                w = w_try;
                b = b_try;
                current = obj;
                break;
            }
            lr *= 0.5;
            if lr < MIN_LR {
                break; // keep previous weights; epoch is a no-op
            }
        }
        objectives.push(current);
    }

    (w, b, objectives)
}

/// Fit one-vs-rest classifiers for the three severity classes.
pub fn fit_svm(x: &Matrix, y: &[u8], params: &SvmParams) -> Result<SvmModel> {
    if x.rows() != y.len() {
        return Err(Error::invalid("fit_svm: x and y disagree on n"));
    }
    if x.rows() < 2 {
        return Err(Error::invalid("fit_svm requires at least 2 rows"));
    }
    let mut present: Vec<u8> = y.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::invalid(
            "fit_svm requires at least two classes in the training labels",
        ));
    }

    let class_codes = vec![1u8, 2, 3];
    let mut weights = Vec::with_capacity(3);
    let mut biases = Vec::with_capacity(3);
    let mut epoch_objectives = Vec::with_capacity(3);

    for (idx, &code) in class_codes.iter().enumerate() {
        let y_signed: Vec<f64> = y
            .iter()
            .map(|&c| if c == code { 1.0 } else { -1.0 })
            .collect();
        let class_seed = rng::derive_seed(params.seed, idx as u64);
        let (w, b, objectives) = fit_binary(x, &y_signed, params, class_seed);
        weights.push(w);
        biases.push(b);
        epoch_objectives.push(objectives);
    }

    Ok(SvmModel {
        class_codes,
        weights,
        biases,
        params: params.clone(),
        epoch_objectives,
    })
}
