//! Confusion matrices and classification metrics.
//!
//! Rows are actual classes, columns are predicted, label order fixed as
//! Low, Medium, High. Zero-denominator precision/recall is defined as 0
//! with a warning so reports stay well-formed JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RiskLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_labels: Vec<String>,
    /// counts[actual][predicted]
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual\\predicted");
        for l in &self.class_labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.class_labels.iter().enumerate() {
            out.push_str(l);
            for c in &self.counts[i] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Tally actual-vs-predicted class codes (1..=3) into a 3×3 matrix.
pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid("confusion requires equal-length label lists"));
    }
    if actual.is_empty() {
        return Err(Error::invalid("confusion requires at least one sample"));
    }
    let mut counts = vec![vec![0u64; 3]; 3];
    for (&a, &p) in actual.iter().zip(predicted) {
        let ai = RiskLevel::from_code(a)
            .ok_or_else(|| Error::invalid(format!("unknown actual class code {a}")))?
            .code() as usize
            - 1;
        let pi = RiskLevel::from_code(p)
            .ok_or_else(|| Error::invalid(format!("unknown predicted class code {p}")))?
            .code() as usize
            - 1;
        counts[ai][pi] += 1;
    }
    Ok(ConfusionMatrix {
        class_labels: RiskLevel::ALL.iter().map(|l| l.name().to_string()).collect(),
        counts,
    })
}

/// What the metrics were computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatedOn {
    TestSplit,
    FullDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub evaluated_on: EvaluatedOn,
    pub warnings: Vec<String>,
}

/// Precision/recall/F1 per class plus unweighted macro averages.
pub fn metrics(cm: &ConfusionMatrix, evaluated_on: EvaluatedOn) -> MetricsReport {
    let k = cm.class_labels.len();
    let mut per_class = Vec::with_capacity(k);
    let mut warnings = Vec::new();

    for i in 0..k {
        let tp = cm.counts[i][i] as f64;
        let predicted = cm.col_sum(i) as f64;
        let actual = cm.row_sum(i) as f64;

        let precision = if predicted == 0.0 {
            warnings.push(format!(
                "precision undefined for '{}' (no predictions); reported as 0",
                cm.class_labels[i]
            ));
            0.0
        } else {
            tp / predicted
        };
        let recall = if actual == 0.0 {
            warnings.push(format!(
                "recall undefined for '{}' (no actual samples); reported as 0",
                cm.class_labels[i]
            ));
            0.0
        } else {
            tp / actual
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            label: cm.class_labels[i].clone(),
            precision,
            recall,
            f1,
        });
    }

    let kf = k as f64;
    MetricsReport {
        macro_precision: per_class.iter().map(|c| c.precision).sum::<f64>() / kf,
        macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / kf,
        macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / kf,
        accuracy: cm.accuracy(),
        per_class,
        evaluated_on,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_give_identity_metrics() {
        let actual = [1u8, 2, 3, 1, 2, 3];
        let cm = confusion(&actual, &actual).unwrap();
        assert_eq!(cm.trace(), 6);
        let report = metrics(&cm, EvaluatedOn::TestSplit);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn single_class_fills_one_cell() {
        let cm = confusion(&[2u8, 2, 2], &[2u8, 2, 2]).unwrap();
        assert_eq!(cm.counts[1][1], 3);
        assert_eq!(cm.total(), 3);
    }

    #[test]
    fn swapped_labels_fill_antidiagonal() {
        let cm = confusion(&[1u8, 2], &[2u8, 1]).unwrap();
        assert_eq!(cm.counts[0][1], 1);
        assert_eq!(cm.counts[1][0], 1);
        assert_eq!(cm.trace(), 0);
    }

    #[test]
    fn hand_computed_two_class_metrics() {
        // [[5,5],[0,10]] over Low/Medium: precision(Low)=1, recall(Low)=0.5, f1=2/3
        let cm = ConfusionMatrix {
            class_labels: vec!["Low".into(), "Medium".into()],
            counts: vec![vec![5, 5], vec![0, 10]],
        };
        let report = metrics(&cm, EvaluatedOn::TestSplit);
        assert_eq!(report.per_class[0].precision, 1.0);
        assert_eq!(report.per_class[0].recall, 0.5);
        assert!((report.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.accuracy, 0.75);
    }

    #[test]
    fn zero_denominator_is_zero_with_warning() {
        // nothing predicted as High, nothing actually High
        let cm = confusion(&[1u8, 2], &[1u8, 2]).unwrap();
        let report = metrics(&cm, EvaluatedOn::TestSplit);
        assert_eq!(report.per_class[2].precision, 0.0);
        assert_eq!(report.per_class[2].recall, 0.0);
        assert_eq!(report.warnings.len(), 2);
    }

    #[test]
    fn accuracy_decomposes_over_recalls() {
        let cm = ConfusionMatrix {
            class_labels: vec!["Low".into(), "Medium".into(), "High".into()],
            counts: vec![vec![8, 1, 1], vec![2, 5, 3], vec![0, 4, 6]],
        };
        let report = metrics(&cm, EvaluatedOn::FullDataset);
        let total = cm.total() as f64;
        let decomposed: f64 = (0..3)
            .map(|i| report.per_class[i].recall * cm.row_sum(i) as f64 / total)
            .sum();
        assert!((report.accuracy - decomposed).abs() < 1e-15);
    }

    #[test]
    fn unknown_code_is_an_error() {
        assert!(confusion(&[4u8], &[1u8]).is_err());
        assert!(confusion(&[1u8], &[0u8]).is_err());
    }

    #[test]
    fn label_order_is_fixed() {
        let cm = confusion(&[3u8], &[3u8]).unwrap();
        assert_eq!(cm.class_labels, vec!["Low", "Medium", "High"]);
    }
}
