//! Confusion-matrix statistics and the scalar fitness objective.
//!
//! Accuracy counts every region, background included. The averaged precision
//! and recall run over object classes only (labels `1..=C`), each class
//! weighted by its share `N_c / N_Total` of object-class samples. Fitness is
//! the weighted sum of the three.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Weights of accuracy, averaged precision and averaged recall in the
/// scalar fitness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitnessWeights {
    pub w_a: f64,
    pub w_p: f64,
    pub w_r: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            w_a: 0.5,
            w_p: 0.3,
            w_r: 0.2,
        }
    }
}

impl FitnessWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_a.is_finite() && self.w_p.is_finite() && self.w_r.is_finite()) {
            return Err(Error::numeric("fitness weights must be finite"));
        }
        if self.w_a < 0.0 || self.w_p < 0.0 || self.w_r < 0.0 {
            return Err(Error::config("fitness weights must be non-negative"));
        }
        if self.w_a + self.w_p + self.w_r <= 0.0 {
            return Err(Error::config("fitness weights must not all be zero"));
        }
        Ok(())
    }
}

/// Per-class counts over `(truth, predicted)` label pairs.
///
/// `counts[t][p]` is the number of regions with truth label `t` predicted as
/// `p`. Label 0 is background; labels `1..=C` are object classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_labels: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// Count `(truth, predicted)` pairs. `n_labels` is `C + 1` (background
    /// plus object classes).
    pub fn from_predictions(predicted: &[usize], truth: &[usize], n_labels: usize) -> Result<Self> {
        if predicted.is_empty() || truth.is_empty() {
            return Err(Error::data("empty label vectors"));
        }
        if predicted.len() != truth.len() {
            return Err(Error::data(format!(
                "length mismatch: {} predictions vs {} truth labels",
                predicted.len(),
                truth.len()
            )));
        }
        let mut counts = vec![0u64; n_labels * n_labels];
        for (k, (&p, &t)) in predicted.iter().zip(truth).enumerate() {
            if t >= n_labels {
                return Err(Error::data(format!(
                    "region {k}: truth label {t} outside 0..{}",
                    n_labels - 1
                )));
            }
            if p >= n_labels {
                return Err(Error::data(format!(
                    "region {k}: predicted label {p} outside 0..{}",
                    n_labels - 1
                )));
            }
            counts[t * n_labels + p] += 1;
        }
        Ok(ConfusionMatrix { n_labels, counts })
    }

    /// Number of labels including background.
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Number of object classes `C`.
    pub fn object_classes(&self) -> usize {
        self.n_labels - 1
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_labels + predicted]
    }

    /// Total number of evaluated regions.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.count(class, class)
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.n_labels)
            .filter(|&t| t != class)
            .map(|t| self.count(t, class))
            .sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.n_labels)
            .filter(|&p| p != class)
            .map(|p| self.count(class, p))
            .sum()
    }

    /// `N_c`: number of regions whose truth label is `class`.
    pub fn support(&self, class: usize) -> u64 {
        (0..self.n_labels).map(|p| self.count(class, p)).sum()
    }

    /// `N_Total`: object-class samples, background excluded.
    pub fn object_total(&self) -> u64 {
        (1..self.n_labels).map(|c| self.support(c)).sum()
    }

    /// Fraction of all regions on the diagonal, background included.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::data("empty confusion matrix"));
        }
        let correct: u64 = (0..self.n_labels).map(|c| self.count(c, c)).sum();
        Ok(correct as f64 / total as f64)
    }

    /// Class-frequency-weighted precision over object classes.
    ///
    /// A class that is never predicted (`TP + FP = 0`) contributes 0.
    pub fn precision_avg(&self) -> Result<f64> {
        let n_total = self.object_total();
        if n_total == 0 {
            return Err(Error::data(
                "no object-class samples: averaged precision undefined",
            ));
        }
        let mut sum = 0.0;
        for c in 1..self.n_labels {
            let n_c = self.support(c);
            if n_c == 0 {
                continue;
            }
            let tp = self.true_positives(c);
            let denom = tp + self.false_positives(c);
            if denom == 0 {
                continue;
            }
            sum += (tp as f64 / denom as f64) * (n_c as f64 / n_total as f64);
        }
        Ok(sum)
    }

    /// Class-frequency-weighted recall over object classes.
    pub fn recall_avg(&self) -> Result<f64> {
        let n_total = self.object_total();
        if n_total == 0 {
            return Err(Error::data(
                "no object-class samples: averaged recall undefined",
            ));
        }
        let mut sum = 0.0;
        for c in 1..self.n_labels {
            let n_c = self.support(c);
            if n_c == 0 {
                continue;
            }
            let tp = self.true_positives(c);
            sum += (tp as f64 / (tp + self.false_negatives(c)) as f64)
                * (n_c as f64 / n_total as f64);
        }
        Ok(sum)
    }

    /// Weighted sum of precision, recall and accuracy.
    pub fn fitness(&self, fw: &FitnessWeights) -> Result<f64> {
        Ok(fw.w_p * self.precision_avg()?
            + fw.w_r * self.recall_avg()?
            + fw.w_a * self.accuracy()?)
    }

    /// Raw counts as nested rows, truth-major.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.n_labels)
            .map(|t| (0..self.n_labels).map(|p| self.count(t, p)).collect())
            .collect()
    }
}

/// Serialized metrics snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision_avg: f64,
    pub recall_avg: f64,
    pub fitness: f64,
    pub per_class: BTreeMap<usize, ClassStats>,
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix, fw: &FitnessWeights) -> Result<Self> {
        let mut per_class = BTreeMap::new();
        for c in 1..cm.n_labels() {
            let tp = cm.true_positives(c);
            let fp = cm.false_positives(c);
            let fn_ = cm.false_negatives(c);
            let support = cm.support(c);
            let precision = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let recall = if support == 0 {
                0.0
            } else {
                tp as f64 / support as f64
            };
            per_class.insert(
                c,
                ClassStats {
                    support,
                    tp,
                    fp,
                    fn_,
                    precision,
                    recall,
                },
            );
        }
        Ok(MetricsReport {
            accuracy: cm.accuracy()?,
            precision_avg: cm.precision_avg()?,
            recall_avg: cm.recall_avg()?,
            fitness: cm.fitness(fw)?,
            per_class,
            confusion: cm.rows(),
        })
    }
}
