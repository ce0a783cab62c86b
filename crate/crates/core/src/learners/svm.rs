//! One-vs-rest linear SVM trained by full-batch subgradient descent on the
//! L2-regularized hinge loss. Deterministic: weights start at zero and the
//! data is visited in order.

use crate::learners::knn::argmax_low;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// One (weights, bias) pair per label.
    machines: Vec<(Vec<f64>, f64)>,
}

const BASE_STEP: f64 = 1.0;

impl SvmModel {
    pub fn fit(
        lambda: f64,
        epochs: usize,
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
    ) -> SvmModel {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let mut machines = Vec::with_capacity(n_labels);
        for class in 0..n_labels {
            let targets: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let mut w = vec![0.0f64; dim];
            let mut b = 0.0f64;
            for epoch in 0..epochs {
                let step = BASE_STEP / (1.0 + lambda * BASE_STEP * epoch as f64);
                let mut grad_w = vec![0.0f64; dim];
                let mut grad_b = 0.0f64;
                for (row, &y) in rows.iter().zip(&targets) {
                    let margin = y * (dot(&w, row) + b);
                    if margin < 1.0 {
                        for (g, &x) in grad_w.iter_mut().zip(row) {
                            *g -= y * x;
                        }
                        grad_b -= y;
                    }
                }
                for (wd, g) in w.iter_mut().zip(&grad_w) {
                    *wd -= step * (lambda * *wd + g / n);
                }
                b -= step * grad_b / n;
            }
            machines.push((w, b));
        }
        SvmModel { machines }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let scores: Vec<f64> = self
            .machines
            .iter()
            .map(|(w, b)| dot(w, x) + b)
            .collect();
        argmax_low(&scores)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
