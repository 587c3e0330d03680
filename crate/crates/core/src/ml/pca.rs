//! PCA by cyclic Jacobi eigendecomposition of the sample covariance of
//! z-scored data.
//!
//! Jacobi rotations annihilate one off-diagonal element at a time; sweeping
//! until the off-diagonal norm falls below 1e-12 gives eigenvalues accurate
//! to machine precision for the small symmetric matrices that arise here.
//! Components follow a fixed sign convention (largest-magnitude loading is
//! positive) so fitted models are byte-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// k×d; rows are orthonormal principal axes, highest variance first.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    /// Project rows of `x` (raw scale) into the component space.
    pub fn project(&self, x: &Matrix) -> Matrix {
        let z = features::apply_standardization(x, &self.means, &self.stds);
        let k = self.k();
        let mut out = Matrix::zeros(z.rows(), k);
        for i in 0..z.rows() {
            for c in 0..k {
                let mut dot = 0.0;
                for j in 0..z.cols() {
                    dot += z.get(i, j) * self.components.get(c, j);
                }
                out.set(i, c, dot);
            }
        }
        out
    }
}

/// Off-diagonal Frobenius norm, the Jacobi convergence measure.
fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a.get(p, q) * a.get(p, q);
            }
        }
    }
    sum.sqrt()
}

/// Eigen-decompose a symmetric matrix with cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns), unsorted.
pub fn jacobi_eigen(mut a: Matrix, tol: f64, max_sweeps: usize) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "jacobi_eigen needs a square matrix");
    let mut v = Matrix::identity(n);

    for _ in 0..max_sweeps {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // smaller-magnitude rotation root for stability
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for j in 0..n {
                    let ajp = a.get(j, p);
                    let ajq = a.get(j, q);
                    a.set(j, p, c * ajp - s * ajq);
                    a.set(j, q, s * ajp + c * ajq);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, c * apj - s * aqj);
                    a.set(q, j, s * apj + c * aqj);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                for j in 0..n {
                    let vjp = v.get(j, p);
                    let vjq = v.get(j, q);
                    v.set(j, p, c * vjp - s * vjq);
                    v.set(j, q, s * vjp + c * vjq);
                }
            }
        }
    }

    let eigenvalues = (0..n).map(|i| a.get(i, i)).collect();
    (eigenvalues, v)
}

/// Fit PCA with `k` components. Standardizes internally and stores the
/// means/stds so unseen rows are projected with training statistics.
pub fn fit_pca(x: &Matrix, k: usize) -> Result<PcaModel> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::invalid("fit_pca requires at least 2 rows"));
    }
    if k == 0 || k > d {
        return Err(Error::invalid(format!(
            "fit_pca: k = {k} outside 1..={d}"
        )));
    }

    let (z, means, stds, _warnings) = features::standardize(x)?;

    // sample covariance of the z-scored columns
    let mut cov = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut sum = 0.0;
            for r in 0..n {
                sum += z.get(r, i) * z.get(r, j);
            }
            let c = sum / (n - 1) as f64;
            cov.set(i, j, c);
            cov.set(j, i, c);
        }
    }

    let (eigenvalues, vectors) = jacobi_eigen(cov, 1e-12, 100);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .expect("finite eigenvalues")
    });

    let mut components = Matrix::zeros(k, d);
    let mut explained = Vec::with_capacity(k);
    for (row, &src) in order.iter().take(k).enumerate() {
        explained.push(eigenvalues[src].max(0.0));
        let mut comp: Vec<f64> = (0..d).map(|j| vectors.get(j, src)).collect();
        // sign convention: the largest-|loading| entry is positive
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
            .map(|(i, _)| i)
            .expect("non-empty component");
        if comp[lead] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        for (j, val) in comp.into_iter().enumerate() {
            components.set(row, j, val);
        }
    }

    Ok(PcaModel {
        means,
        stds,
        components,
        explained_variance: explained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn line_data_has_one_component() {
        let x = Matrix::from_rows((0..10).map(|i| vec![i as f64, i as f64]).collect());
        let model = fit_pca(&x, 2).unwrap();
        let c0 = model.components.row(0);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((c0[0] - inv_sqrt2).abs() < 1e-9, "c0 = {c0:?}");
        assert!((c0[1] - inv_sqrt2).abs() < 1e-9);
        assert!((model.explained_variance[0] - 2.0).abs() < 1e-9);
        assert!(model.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn components_are_orthonormal() {
        let x = Matrix::from_rows(
            (0..40)
                .map(|i| {
                    let t = i as f64;
                    vec![t, (t * 1.3) % 7.0, (t * 0.7) % 5.0, (t * 2.1) % 3.0]
                })
                .collect(),
        );
        let model = fit_pca(&x, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expected = if a == b { 1.0 } else { 0.0 };
                let got = dot(model.components.row(a), model.components.row(b));
                assert!((got - expected).abs() < 1e-9, "({a},{b}) = {got}");
            }
        }
    }

    #[test]
    fn eigenvalue_sum_equals_dimension() {
        let x = Matrix::from_rows(
            (0..30)
                .map(|i| {
                    let t = i as f64;
                    vec![t.sin() * 3.0, (t * 0.9).cos(), t % 4.0]
                })
                .collect(),
        );
        let model = fit_pca(&x, 3).unwrap();
        let sum: f64 = model.explained_variance.iter().sum();
        assert!((sum - 3.0).abs() < 1e-6, "sum = {sum}");
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let x = Matrix::from_rows(vec![
            vec![1.0, 0.0],
            vec![4.0, 3.0],
            vec![2.0, 8.0],
            vec![7.0, 5.0],
        ]);
        let model = fit_pca(&x, 2).unwrap();
        let z = features::apply_standardization(&x, &model.means, &model.stds);
        let proj = model.project(&x);
        for i in 0..4 {
            for j in 0..4 {
                let dz: f64 = (0..2).map(|c| (z.get(i, c) - z.get(j, c)).powi(2)).sum();
                let dp: f64 = (0..2).map(|c| (proj.get(i, c) - proj.get(j, c)).powi(2)).sum();
                assert!((dz - dp).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn k_larger_than_d_is_an_error() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0]]);
        assert!(fit_pca(&x, 2).is_err());
    }

    #[test]
    fn explained_variance_is_sorted() {
        let x = Matrix::from_rows(
            (0..25)
                .map(|i| vec![i as f64, (i * i % 11) as f64, (i % 3) as f64])
                .collect(),
        );
        let model = fit_pca(&x, 3).unwrap();
        let ev = &model.explained_variance;
        assert!(ev[0] >= ev[1] && ev[1] >= ev[2] && ev[2] >= 0.0);
    }
}
