//! Gaussian naive Bayes on raw features.

use crate::learners::knn::argmax_low;

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    /// Per label: (log prior, per-feature mean, per-feature variance).
    classes: Vec<Option<ClassStats>>,
}

#[derive(Debug, Clone, PartialEq)]
struct ClassStats {
    log_prior: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

const LN_2PI: f64 = 1.8378770664093453;

impl NbModel {
    pub fn fit(
        var_floor: f64,
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
    ) -> NbModel {
        let dim = rows.first().map_or(0, |r| r.len());
        let n_total = rows.len() as f64;
        let mut classes = Vec::with_capacity(n_labels);
        for class in 0..n_labels {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == class)
                .map(|(r, _)| r)
                .collect();
            if members.is_empty() {
                classes.push(None);
                continue;
            }
            let n = members.len() as f64;
            let mut mean = vec![0.0; dim];
            for row in &members {
                for (m, &x) in mean.iter_mut().zip(row.iter()) {
                    *m += x;
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            let mut var = vec![0.0; dim];
            for row in &members {
                for (d, (v, &x)) in var.iter_mut().zip(row.iter()).enumerate() {
                    let diff = x - mean[d];
                    *v += diff * diff;
                }
            }
            for v in &mut var {
                *v = (*v / n).max(var_floor);
            }
            classes.push(Some(ClassStats {
                log_prior: (n / n_total).ln(),
                mean,
                var,
            }));
        }
        NbModel { classes }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let scores: Vec<f64> = self
            .classes
            .iter()
            .map(|stats| match stats {
                None => f64::NEG_INFINITY,
                Some(s) => {
                    let mut log_post = s.log_prior;
                    for d in 0..x.len() {
                        let diff = x[d] - s.mean[d];
                        log_post -= 0.5 * (LN_2PI + s.var[d].ln() + diff * diff / s.var[d]);
                    }
                    log_post
                }
            })
            .collect();
        argmax_low(&scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn separated_blobs_held_out_accuracy() {
        // Unit-variance blobs at (-5,-5) and (+5,+5), 100 train + 100 test
        // points per class; the Bayes error is negligible at this spacing.
        let mut rng = crate::rng::rng_from(2024, &[crate::rng::domain::SYNTHETIC]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut sample = |cx: f64, cy: f64, n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| vec![cx + normal.sample(&mut rng), cy + normal.sample(&mut rng)])
                .collect()
        };
        let mut train_rows = sample(-5.0, -5.0, 100);
        train_rows.extend(sample(5.0, 5.0, 100));
        let train_labels: Vec<usize> = (0..200).map(|k| usize::from(k >= 100)).collect();
        let mut test_rows = sample(-5.0, -5.0, 100);
        test_rows.extend(sample(5.0, 5.0, 100));
        let test_labels: Vec<usize> = (0..200).map(|k| usize::from(k >= 100)).collect();

        let model = NbModel::fit(1e-9, &train_rows, &train_labels, 2);
        let correct = test_rows
            .iter()
            .zip(&test_labels)
            .filter(|(row, &l)| model.predict(row) == l)
            .count();
        assert!(correct as f64 / 200.0 >= 0.99, "accuracy {}", correct);
        let _ = rng.random::<u64>();
    }

    #[test]
    fn variance_floor_keeps_constant_features_finite() {
        let rows = vec![vec![1.0, 3.0], vec![1.0, 4.0], vec![2.0, -3.0], vec![2.0, -4.0]];
        let labels = vec![0, 0, 1, 1];
        let model = NbModel::fit(1e-9, &rows, &labels, 2);
        assert_eq!(model.predict(&[1.0, 3.5]), 0);
        assert_eq!(model.predict(&[2.0, -3.5]), 1);
    }

    #[test]
    fn prior_breaks_feature_free_ties() {
        // Identical likelihoods; class 1 has the larger prior.
        let rows = vec![vec![0.0], vec![0.0], vec![0.0]];
        let labels = vec![1, 1, 0];
        let model = NbModel::fit(1e-9, &rows, &labels, 2);
        assert_eq!(model.predict(&[0.0]), 1);
    }
}
