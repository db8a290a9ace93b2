//! Classification metrics: accuracy, per-class and macro F1, cluster
//! identification rate.

use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum number of streamlines for a cluster to count as detected.
pub const DEFAULT_CIR_THRESHOLD: usize = 20;

/// `k × k` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        Ok(Self {
            k,
            counts: rows.concat(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c * self.k..(c + 1) * self.k].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|r| self.get(r, c)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k.max(1)).map(<[u64]>::to_vec).collect()
    }

    /// Relabel class `c` as `perm[c]` on both axes.
    pub fn permuted(&self, perm: &[usize]) -> ConfusionMatrix {
        let mut out = ConfusionMatrix::zeros(self.k);
        for t in 0..self.k {
            for p in 0..self.k {
                out.counts[perm[t] * self.k + perm[p]] = self.get(t, p);
            }
        }
        out
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= k || p >= k {
            return Err(Error::LabelOutOfRange { label: t.max(p), k });
        }
        cm.counts[t * k + p] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    /// `None` for classes that never occur in either the truth or the
    /// predictions; those are left out of `mean` and `std`.
    pub per_class: Vec<Option<f64>>,
    pub mean: f64,
    /// Population standard deviation over the included classes.
    pub std: f64,
    pub excluded: Vec<usize>,
}

pub fn macro_f1(cm: &ConfusionMatrix) -> Result<F1Summary> {
    if cm.k() < 2 {
        return Err(Error::Config(format!("macro F1 needs k >= 2, got {}", cm.k())));
    }
    let mut per_class = Vec::with_capacity(cm.k());
    let mut excluded = Vec::new();
    for c in 0..cm.k() {
        let tp = cm.get(c, c) as f64;
        let (rows, cols) = (cm.row_sum(c), cm.col_sum(c));
        let f1 = match (rows, cols) {
            (0, 0) => {
                excluded.push(c);
                None
            }
            (0, _) | (_, 0) => Some(0.0),
            _ => {
                let precision = tp / cols as f64;
                let recall = tp / rows as f64;
                if precision + recall == 0.0 {
                    Some(0.0)
                } else {
                    Some(2.0 * precision * recall / (precision + recall))
                }
            }
        };
        per_class.push(f1);
    }
    if !excluded.is_empty() {
        warn!(
            "F1 undefined for {} class(es) absent from truth and predictions: {:?}",
            excluded.len(),
            excluded
        );
    }
    let included: Vec<f64> = per_class.iter().flatten().copied().collect();
    if included.is_empty() {
        return Err(Error::Empty("no class occurs in the confusion matrix".into()));
    }
    let n = included.len() as f64;
    let mean = included.iter().sum::<f64>() / n;
    let std = (included.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(F1Summary {
        per_class,
        mean,
        std,
        excluded,
    })
}

/// Fraction of `expected` cluster ids predicted for at least `threshold`
/// streamlines.
pub fn cir(predicted: &[usize], expected: &[usize], threshold: usize) -> Result<f64> {
    if expected.is_empty() {
        return Err(Error::Empty("no expected clusters".into()));
    }
    if threshold == 0 {
        return Err(Error::Config("CIR threshold must be >= 1".into()));
    }
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &p in predicted {
        *counts.entry(p).or_default() += 1;
    }
    let detected = expected
        .iter()
        .filter(|id| counts.get(id).copied().unwrap_or(0) >= threshold)
        .count();
    Ok(detected as f64 / expected.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub accuracy: f64,
    pub per_class_f1: Vec<Option<f64>>,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub excluded_classes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cir: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cir_threshold: Option<usize>,
    pub confusion: Vec<Vec<u64>>,
}

impl MetricsReport {
    pub fn compute(truth: &[usize], predicted: &[usize], k: usize) -> Result<Self> {
        let cm = confusion(truth, predicted, k)?;
        let acc = accuracy(&cm)?;
        let f1 = macro_f1(&cm)?;
        Ok(Self {
            samples: truth.len(),
            accuracy: acc,
            per_class_f1: f1.per_class,
            macro_f1_mean: f1.mean,
            macro_f1_std: f1.std,
            excluded_classes: f1.excluded,
            cir: None,
            cir_threshold: None,
            confusion: cm.to_rows(),
        })
    }

    pub fn with_cir(mut self, predicted: &[usize], expected: &[usize], threshold: usize) -> Result<Self> {
        self.cir = Some(cir(predicted, expected, threshold)?);
        self.cir_threshold = Some(threshold);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let labels = [0, 1, 2, 2, 1];
        let cm = confusion(&labels, &labels, 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(cm.get(t, p) > 0, t == p);
            }
        }
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        let f1 = macro_f1(&cm).unwrap();
        assert_eq!(f1.per_class, vec![Some(1.0); 3]);
        assert_eq!((f1.mean, f1.std), (1.0, 0.0));
    }

    #[test]
    fn empty_input() {
        let cm = confusion(&[], &[], 4).unwrap();
        assert_eq!(cm, ConfusionMatrix::zeros(4));
        assert!(accuracy(&cm).is_err());
    }

    #[test]
    fn accuracy_hand_cases() {
        let wrong = ConfusionMatrix::from_rows(&[vec![0, 5], vec![5, 0]]).unwrap();
        assert_eq!(accuracy(&wrong).unwrap(), 0.0);
        let cm = ConfusionMatrix::from_rows(&[vec![3, 1], vec![2, 4]]).unwrap();
        assert!((accuracy(&cm).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn f1_hand_case() {
        // class 0: P = 1/1, R = 1/2 → 2/3; class 1: P = 2/3, R = 1 → 4/5
        let cm = ConfusionMatrix::from_rows(&[vec![1, 1], vec![0, 2]]).unwrap();
        let f1 = macro_f1(&cm).unwrap();
        assert!((f1.per_class[0].unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((f1.per_class[1].unwrap() - 0.8).abs() < 1e-15);
        assert!((f1.mean - 0.733_333_333_333_333_3).abs() < 1e-12);
        assert!((f1.std - 0.066_666_666_666_666_6).abs() < 1e-12);
    }

    #[test]
    fn absent_class_is_excluded() {
        let cm = ConfusionMatrix::from_rows(&[vec![2, 0, 0], vec![0, 0, 0], vec![1, 0, 3]]).unwrap();
        let f1 = macro_f1(&cm).unwrap();
        assert_eq!(f1.per_class[1], None);
        assert_eq!(f1.excluded, vec![1]);
        assert!(f1.per_class[0].is_some() && f1.per_class[2].is_some());
    }

    #[test]
    fn one_sided_zero_gives_zero_f1() {
        // class 1 predicted but never true
        let cm = ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 0]]).unwrap();
        assert_eq!(macro_f1(&cm).unwrap().per_class[1], Some(0.0));
    }

    #[test]
    fn cir_cases() {
        let mut pred = vec![0; 25];
        pred.extend([1; 19]);
        pred.extend([2; 20]);
        assert!((cir(&pred, &[0, 1, 2], 20).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cir(&pred, &[0, 2], 20).unwrap(), 1.0);
        assert_eq!(cir(&[7; 100], &[0, 1, 2], 20).unwrap(), 0.0);
        assert!(cir(&pred, &[], 20).is_err());
        assert!(cir(&pred, &[0], 0).is_err());
    }

    #[test]
    fn report_serializes() {
        let r = MetricsReport::compute(&[0, 1, 1], &[0, 1, 0], 2)
            .unwrap()
            .with_cir(&[0, 1, 0], &[0, 1], 1)
            .unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["samples"], 3);
        assert_eq!(json["cir"], 1.0);
        assert_eq!(json["confusion"][1][0], 1);
    }
}
