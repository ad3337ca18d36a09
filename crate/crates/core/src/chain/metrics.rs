//! Confusion-matrix metrics and the prediction/truth ratio histogram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub f1: f64,
    /// Metrics whose denominator was zero and are reported as 0.
    pub undefined: Vec<String>,
}

impl Contingency {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |name: &str, num: usize, den: usize| {
            if den == 0 {
                undefined.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let accuracy = ratio("accuracy", tp + tn, tp + fp + fn_ + tn);
        let specificity = ratio("specificity", tn, tn + fp);
        let sensitivity = ratio("sensitivity", tp, tp + fn_);
        let f1 = ratio("f1", 2 * tp, 2 * tp + fp + fn_);
        Contingency {
            tp,
            fp,
            fn_,
            tn,
            accuracy,
            specificity,
            sensitivity,
            f1,
            undefined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn contingency(predictions: &[bool], truths: &[bool]) -> Result<Contingency> {
    if predictions.is_empty() {
        return Err(Error::Input("contingency of an empty set".into()));
    }
    if predictions.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, t) in predictions.iter().zip(truths) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Contingency::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub position: f64,
    /// `dashed` for the 5% interval, `dotted` for the 10% interval.
    pub style: String,
}

/// Counts of `pred / truth` in bins of width 0.02 centred on 0.00 .. 3.00.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
    /// Pairs with a zero truth, which have no ratio.
    pub skipped: usize,
    pub markers: Vec<Marker>,
}

const BIN_WIDTH: f64 = 0.02;
const BINS: usize = 151;

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.underflow + self.overflow + self.skipped
    }

    /// `kind,x,count,style` rows: one per bin, then the overflow buckets and
    /// the interval markers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,x,count,style\n");
        for (c, n) in self.centers.iter().zip(&self.counts) {
            out.push_str(&format!("bin,{c:.2},{n},\n"));
        }
        out.push_str(&format!("underflow,,{},\n", self.underflow));
        out.push_str(&format!("overflow,,{},\n", self.overflow));
        for m in &self.markers {
            out.push_str(&format!("marker,{:.2},,{}\n", m.position, m.style));
        }
        out
    }
}

pub fn margin_histogram(pairs: &[(f64, f64)]) -> Histogram {
    let mut counts = vec![0; BINS];
    let (mut underflow, mut overflow, mut skipped) = (0, 0, 0);
    for &(pred, truth) in pairs {
        if truth == 0.0 || !pred.is_finite() || !truth.is_finite() {
            skipped += 1;
            continue;
        }
        let k = (pred / truth / BIN_WIDTH).round();
        if k < 0.0 {
            underflow += 1;
        } else if k >= BINS as f64 {
            overflow += 1;
        } else {
            counts[k as usize] += 1;
        }
    }
    let markers = [(0.95, "dashed"), (1.05, "dashed"), (0.90, "dotted"), (1.10, "dotted")]
        .into_iter()
        .map(|(position, style)| Marker {
            position,
            style: style.to_string(),
        })
        .collect();
    Histogram {
        bin_width: BIN_WIDTH,
        centers: (0..BINS).map(|k| k as f64 * BIN_WIDTH).collect(),
        counts,
        underflow,
        overflow,
        skipped,
        markers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let c = contingency(&[true, false, false, false], &[true, true, false, false]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (1, 0, 1, 2));
        assert_eq!(c.accuracy, 0.75);
        assert_eq!(c.specificity, 1.0);
        assert_eq!(c.sensitivity, 0.5);
        assert!((c.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(c.undefined.is_empty());
    }

    #[test]
    fn degenerate_negative_class() {
        let c = contingency(&[false, false], &[false, false]).unwrap();
        assert_eq!(c.sensitivity, 0.0);
        assert_eq!(c.specificity, 1.0);
        assert!(c.undefined.contains(&"sensitivity".to_string()));
        assert!(c.undefined.contains(&"f1".to_string()));
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(contingency(&[], &[]).is_err());
        assert!(contingency(&[true], &[true, false]).unwrap_err().is_contract_violation());
    }

    #[test]
    fn perfect_predictions_spike_at_one() {
        let h = margin_histogram(&[(3.0, 3.0), (9.0, 9.0), (1.0, 1.0)]);
        assert_eq!(h.counts[50], 3);
        assert_eq!(h.total(), 3);
        assert!((h.centers[50] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eight_percent_errors_fall_between_the_lines() {
        let pairs: Vec<(f64, f64)> = (1..=20).map(|t| (1.08 * t as f64, t as f64)).collect();
        let h = margin_histogram(&pairs);
        for (c, n) in h.centers.iter().zip(&h.counts) {
            if *n > 0 {
                assert!(*c > 1.05 && *c < 1.10, "{c}");
            }
        }
        assert_eq!(h.total(), 20);
    }

    #[test]
    fn counts_are_conserved() {
        let h = margin_histogram(&[(1.0, 1.0), (10.0, 1.0), (-1.0, 1.0), (1.0, 0.0)]);
        assert_eq!((h.overflow, h.underflow, h.skipped), (1, 1, 1));
        assert_eq!(h.total(), 4);
        let csv = h.to_csv();
        assert!(csv.contains("marker,0.95,,dashed"));
        assert!(csv.contains("marker,1.10,,dotted"));
    }
}
