//! Binary confusion matrix and per-class precision / recall / f1 / support.
//!
//! Class 1 (θ = 1, "big jump ahead") is the positive class. Class-0 metrics
//! are obtained by swapping roles. Metrics whose denominator is zero are
//! reported as 0.0 and flagged as degenerate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// The same counts seen with class 0 as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

fn check_binary(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|&l| l > 1) {
        Some(position) => Err(Error::NonBinaryLabel {
            position,
            value: labels[position],
        }),
        None => Ok(()),
    }
}

pub fn confusion(labels_true: &[u8], labels_pred: &[u8]) -> Result<ConfusionMatrix> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::LengthMismatch {
            left: labels_true.len(),
            right: labels_pred.len(),
        });
    }
    check_binary(labels_true)?;
    check_binary(labels_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in labels_true.iter().zip(labels_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// True when any of the three ratios had a zero denominator.
    pub degenerate: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassMetrics {
    /// Metrics for the positive class of `cm`.
    pub fn positive(cm: &ConfusionMatrix) -> Self {
        let (precision, dp) = ratio(cm.tp, cm.tp + cm.fp);
        let (recall, dr) = ratio(cm.tp, cm.tp + cm.fn_);
        let (f1, df) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        Self {
            precision,
            recall,
            f1,
            support: cm.tp + cm.fn_,
            degenerate: dp || dr || df,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub confusion: ConfusionMatrix,
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
    pub accuracy: f64,
}

impl ClassReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        Self {
            confusion,
            class0: ClassMetrics::positive(&confusion.swapped()),
            class1: ClassMetrics::positive(&confusion),
            accuracy: confusion.accuracy(),
        }
    }

    pub fn class(&self, c: u8) -> &ClassMetrics {
        if c == 0 {
            &self.class0
        } else {
            &self.class1
        }
    }
}

pub fn report(labels_true: &[u8], labels_pred: &[u8]) -> Result<ClassReport> {
    Ok(ClassReport::from_confusion(confusion(labels_true, labels_pred)?))
}

/// Aligned text table, one column per model, two decimals, rows ordered
/// precision/recall/f1/support for θ=0 then θ=1.
pub fn format_table(columns: &[(&str, &ClassReport)]) -> String {
    let label_width = 18;
    let col_width = columns.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6) + 2;
    let mut out = String::new();
    let _ = write!(out, "{:label_width$}", "");
    for (name, _) in columns {
        let _ = write!(out, "{name:>col_width$}");
    }
    out.push('\n');
    for class in [0u8, 1] {
        for metric in ["precision", "recall", "f1-score", "support"] {
            let _ = write!(out, "{:label_width$}", format!("{metric} θ={class}"));
            for (_, r) in columns {
                let m = r.class(class);
                let cell = match metric {
                    "precision" => format!("{:.2}", m.precision),
                    "recall" => format!("{:.2}", m.recall),
                    "f1-score" => format!("{:.2}", m.f1),
                    _ => m.support.to_string(),
                };
                let _ = write!(out, "{cell:>col_width$}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_by_definition() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn identity_and_all_zero_predictions() {
        let t = [1, 0, 1, 1, 0];
        let cm = confusion(&t, &t).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        assert_eq!(cm.accuracy(), 1.0);
        let cm = confusion(&t, &[0; 5]).unwrap();
        assert_eq!((cm.tp, cm.fn_), (0, 3));
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion(&[1, 0], &[1]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            confusion(&[1, 2], &[1, 0]),
            Err(Error::NonBinaryLabel { position: 1, value: 2 })
        ));
    }

    #[test]
    fn precision_and_f1() {
        let cm = ConfusionMatrix {
            tp: 3,
            fp: 1,
            tn: 0,
            fn_: 0,
        };
        assert_eq!(ClassMetrics::positive(&cm).precision, 0.75);
        // precision 1/2, recall 1
        let cm = ConfusionMatrix {
            tp: 1,
            fp: 1,
            tn: 0,
            fn_: 0,
        };
        let m = ClassMetrics::positive(&cm);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    /// Counts consistent with the published logistic-regression column of
    /// the 501–600 split: no true θ=1 row is caught.
    #[test]
    fn degenerate_logistic_column() {
        let truth: Vec<u8> = std::iter::repeat_n(0, 57).chain(std::iter::repeat_n(1, 44)).collect();
        let mut pred = vec![0u8; 101];
        // recall(0) = 55/57 needs two θ=0 rows predicted positive
        pred[0] = 1;
        pred[1] = 1;
        let r = report(&truth, &pred).unwrap();
        assert_eq!(format!("{:.2}", r.class0.precision), "0.56");
        assert_eq!(format!("{:.2}", r.class0.recall), "0.96");
        assert_eq!(format!("{:.2}", r.class0.f1), "0.71");
        assert_eq!(r.class0.support, 57);
        assert_eq!(format!("{:.2}", r.class1.precision), "0.00");
        assert_eq!(r.class1.support, 44);
        assert!(r.class1.degenerate);

        let table = format_table(&[("LR", &r)]);
        assert!(table.contains("precision θ=0"));
        assert!(table.contains("0.96"));
        assert_eq!(table.lines().count(), 9);
    }

    #[test]
    fn zero_division_is_flagged() {
        let r = report(&[0, 0], &[0, 0]).unwrap();
        assert_eq!(r.class1.precision, 0.0);
        assert!(r.class1.degenerate);
        assert!(!r.class0.degenerate);
    }
}
