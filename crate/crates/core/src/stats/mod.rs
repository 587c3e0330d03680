//! Per-feature statistics: Pearson correlation (and the full matrix against
//! the encoded severity level), information gain in bits, regression
//! t/p-values, and tie-aware Spearman rank correlation.
//!
//! The "influence ratio" reported for a feature is its Pearson correlation
//! with the encoded Level column, i.e. the last column of the correlation
//! matrix.

pub mod dist;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;

/// Feature-by-feature correlation matrix; the final row/column is the
/// encoded severity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub m: Matrix,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        Some(self.m.get(ia, ib))
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        let want = label.trim().to_ascii_lowercase();
        self.labels
            .iter()
            .position(|l| l.trim().to_ascii_lowercase() == want)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(",{}\n", self.labels.join(",")));
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(label);
            for j in 0..self.labels.len() {
                out.push_str(&format!(",{}", self.m.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// All four statistics for one feature against the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub pearson_r: f64,
    pub info_gain: f64,
    #[serde(with = "float_or_sentinel")]
    pub t_value: f64,
    pub p_value: f64,
}

/// Serialize a possibly infinite t-value; JSON has no ±inf literal.
mod float_or_sentinel {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad t-value '{s}'"))),
        }
    }
}

/// Sample Pearson correlation. Zero-variance input gives 0 by convention.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "pearson requires equal lengths");
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Correlation matrix of every feature column plus the encoded level.
///
/// Constant columns correlate 0 against everything (flagged in warnings)
/// but keep a unit diagonal so the matrix invariants hold.
pub fn pearson_matrix(m: &FeatureMatrix) -> Result<(CorrelationMatrix, Vec<String>)> {
    if m.n() < 3 {
        return Err(Error::invalid("pearson_matrix requires at least 3 rows"));
    }
    let d = m.d();
    let mut labels = m.column_names.clone();
    labels.push("Level".to_string());

    let mut columns: Vec<Vec<f64>> = (0..d).map(|j| m.x.column(j)).collect();
    columns.push(m.y.iter().map(|&c| c as f64).collect());

    let mut warnings = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if is_constant(col) {
            warnings.push(format!(
                "column '{}' is constant; correlations set to 0",
                labels[j]
            ));
        }
    }

    let k = columns.len();
    let mut out = Matrix::zeros(k, k);
    for i in 0..k {
        out.set(i, i, 1.0);
        for j in (i + 1)..k {
            let r = pearson(&columns[i], &columns[j]);
            out.set(i, j, r);
            out.set(j, i, r);
        }
    }

    Ok((CorrelationMatrix { labels, m: out }, warnings))
}

fn entropy_of_counts(counts: &BTreeMap<i64, usize>, n: usize) -> f64 {
    let n = n as f64;
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy (bits) of a discrete column.
pub fn entropy(values: &[i64]) -> f64 {
    let mut counts = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    entropy_of_counts(&counts, values.len())
}

/// Information gain IG = H(target) − Σ_v p(v) · H(target | feature = v),
/// in bits, treating the feature as categorical over its observed values.
pub fn information_gain(feature: &[i64], target: &[i64]) -> Result<f64> {
    if feature.len() != target.len() {
        return Err(Error::invalid(format!(
            "information_gain length mismatch: {} vs {}",
            feature.len(),
            target.len()
        )));
    }
    if feature.is_empty() {
        return Err(Error::invalid("information_gain requires n >= 1"));
    }
    let n = feature.len() as f64;
    let h_target = entropy(target);

    let mut groups: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for (&f, &t) in feature.iter().zip(target) {
        groups.entry(f).or_default().push(t);
    }
    let conditional: f64 = groups
        .values()
        .map(|ts| ts.len() as f64 / n * entropy(ts))
        .sum();

    // clamp tiny negative rounding residue
    Ok((h_target - conditional).max(0.0))
}

/// Univariate regression t-statistic and two-sided p-value.
///
/// t = r·sqrt((n−2)/(1−r²)); a perfect correlation reports ±∞ with p = 0.
pub fn t_and_p(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid("t_and_p requires equal lengths"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid("t_and_p requires n >= 3"));
    }
    let r = pearson(x, y);
    if r >= 1.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    if r <= -1.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let p = dist::student_t_two_sided_p(t, df);
    Ok((t, p))
}

/// Welch two-sample t-test (unequal variances); the `--contrast high-vs-low`
/// alternative to the regression statistic.
pub fn welch_t_and_p(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("welch_t_and_p requires both groups to have n >= 2"));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let var = |xs: &[f64], m: f64| {
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            (0.0, 1.0)
        } else if ma > mb {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NEG_INFINITY, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    // Welch-Satterthwaite degrees of freedom
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    Ok((t, dist::student_t_two_sided_p(t, df)))
}

/// Average ranks with ties receiving the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("no NaN in ranked data"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on tie-averaged ranks.
/// A constant input gives 0 by convention.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman requires equal lengths");
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return 0.0;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Score every feature column against the target and sort by information
/// gain (descending), ties broken by column name ascending.
pub fn rank_features(m: &FeatureMatrix) -> Result<Vec<FeatureScore>> {
    if m.standardized {
        return Err(Error::invalid(
            "rank_features expects raw ordinal columns, not standardized ones",
        ));
    }
    let target_f: Vec<f64> = m.y.iter().map(|&c| c as f64).collect();
    let target_i: Vec<i64> = m.y.iter().map(|&c| c as i64).collect();

    let mut scores = Vec::with_capacity(m.d());
    for (j, name) in m.column_names.iter().enumerate() {
        let col = m.x.column(j);
        let col_i: Vec<i64> = col.iter().map(|&v| v.round() as i64).collect();
        let (t_value, p_value) = t_and_p(&col, &target_f)?;
        scores.push(FeatureScore {
            name: name.clone(),
            pearson_r: pearson(&col, &target_f),
            info_gain: information_gain(&col_i, &target_i)?,
            t_value,
            p_value,
        });
    }
    scores.sort_by(|a, b| {
        b.info_gain
            .partial_cmp(&a.info_gain)
            .expect("finite info gain")
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(scores)
}

/// CSV rendering of ranked feature scores.
pub fn scores_to_csv(scores: &[FeatureScore]) -> String {
    let mut out = String::from("feature,pearson_r,info_gain,t_value,p_value\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.name, s.pearson_r, s.info_gain, s.t_value, s.p_value
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_exact_linear_relation() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-2.0, -4.0, -6.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_self_correlation_is_one() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert!((pearson(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_constant_input_is_zero() {
        assert_eq!(pearson(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn information_gain_identity_equals_target_entropy() {
        let t = [1i64, 1, 2, 2, 3, 3];
        let ig = information_gain(&t, &t).unwrap();
        assert!((ig - entropy(&t)).abs() < 1e-12);
    }

    #[test]
    fn information_gain_constant_feature_is_zero() {
        let f = [7i64; 6];
        let t = [1i64, 1, 2, 2, 3, 3];
        assert_eq!(information_gain(&f, &t).unwrap(), 0.0);
    }

    #[test]
    fn information_gain_clean_partition_is_one_bit() {
        let f = [1i64, 1, 2, 2];
        let t = [1i64, 1, 2, 2];
        assert!((information_gain(&f, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn information_gain_length_mismatch_is_error() {
        assert!(information_gain(&[1, 2], &[1]).is_err());
    }

    #[test]
    fn t_and_p_no_association() {
        // orthogonal x/y: r = 0 exactly
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, -1.0, -1.0, 1.0];
        let (t, p) = t_and_p(&x, &y).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn t_and_p_frozen_value() {
        // r = 0.6325 at n = 10: t = r·sqrt(8/(1-r²)) = 2.309672,
        // p = 0.0497 (cross-checked by the quadrature oracle in tests/).
        let r: f64 = 0.6325;
        let df = 8.0;
        let t = r * (df / (1.0 - r * r)).sqrt();
        assert!((t - 2.309672).abs() < 5e-4, "t = {t}");
        let p = dist::student_t_two_sided_p(t, df);
        assert!((p - 0.0497).abs() < 5e-4, "p = {p}");
    }

    #[test]
    fn t_and_p_perfect_correlation_sentinel() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        let (t, p) = t_and_p(&x, &y).unwrap();
        assert!(t.is_infinite() && t > 0.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn spearman_inverse_monotone() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_nonlinear_monotone_is_one() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_tie_averaging() {
        // ranks of x are (1.5, 1.5, 3); hand computation gives 0.866
        let rho = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        assert!((rho - 0.866).abs() < 1e-3, "rho = {rho}");
    }

    #[test]
    fn spearman_constant_is_zero() {
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0, 5.0]), vec![2.5, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn feature_score_serde_handles_infinite_t() {
        let score = FeatureScore {
            name: "X".into(),
            pearson_r: 1.0,
            info_gain: 1.0,
            t_value: f64::INFINITY,
            p_value: 0.0,
        };
        let json = serde_json::to_string(&score).unwrap();
        assert!(json.contains("\"inf\""));
        let back: FeatureScore = serde_json::from_str(&json).unwrap();
        assert!(back.t_value.is_infinite());
    }
}
