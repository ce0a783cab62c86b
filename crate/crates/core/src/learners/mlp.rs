//! Single-hidden-layer perceptron: logistic hidden units, softmax output,
//! full-batch gradient descent on cross-entropy.

use rand::Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::learners::knn::argmax_low;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    // Row-major: w1 is hidden x input, w2 is output x hidden.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    pub fn fit(
        hidden: usize,
        learning_rate: f64,
        epochs: usize,
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
        rng: &mut Xoshiro256PlusPlus,
    ) -> MlpModel {
        let n_in = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let scale1 = 1.0 / (n_in as f64).sqrt();
        let scale2 = 1.0 / (hidden as f64).sqrt();
        let mut model = MlpModel {
            w1: (0..hidden * n_in)
                .map(|_| rng.random_range(-scale1..scale1))
                .collect(),
            b1: vec![0.0; hidden],
            w2: (0..n_labels * hidden)
                .map(|_| rng.random_range(-scale2..scale2))
                .collect(),
            b2: vec![0.0; n_labels],
            n_in,
            n_hidden: hidden,
            n_out: n_labels,
        };

        let mut grad_w1 = vec![0.0; model.w1.len()];
        let mut grad_b1 = vec![0.0; hidden];
        let mut grad_w2 = vec![0.0; model.w2.len()];
        let mut grad_b2 = vec![0.0; n_labels];
        for _ in 0..epochs {
            grad_w1.iter_mut().for_each(|g| *g = 0.0);
            grad_b1.iter_mut().for_each(|g| *g = 0.0);
            grad_w2.iter_mut().for_each(|g| *g = 0.0);
            grad_b2.iter_mut().for_each(|g| *g = 0.0);

            for (row, &label) in rows.iter().zip(labels) {
                let (hidden_act, probs) = model.forward(row);
                // dL/dz2 = softmax - one_hot
                for c in 0..n_labels {
                    let delta = probs[c] - f64::from(u8::from(c == label));
                    grad_b2[c] += delta;
                    for h in 0..hidden {
                        grad_w2[c * hidden + h] += delta * hidden_act[h];
                    }
                }
                for h in 0..hidden {
                    let mut upstream = 0.0;
                    for c in 0..n_labels {
                        upstream += (probs[c] - f64::from(u8::from(c == label)))
                            * model.w2[c * hidden + h];
                    }
                    let dz = upstream * hidden_act[h] * (1.0 - hidden_act[h]);
                    grad_b1[h] += dz;
                    for d in 0..n_in {
                        grad_w1[h * n_in + d] += dz * row[d];
                    }
                }
            }

            let step = learning_rate / n;
            for (w, g) in model.w1.iter_mut().zip(&grad_w1) {
                *w -= step * g;
            }
            for (b, g) in model.b1.iter_mut().zip(&grad_b1) {
                *b -= step * g;
            }
            for (w, g) in model.w2.iter_mut().zip(&grad_w2) {
                *w -= step * g;
            }
            for (b, g) in model.b2.iter_mut().zip(&grad_b2) {
                *b -= step * g;
            }
        }
        model
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut hidden = Vec::with_capacity(self.n_hidden);
        for h in 0..self.n_hidden {
            let mut z = self.b1[h];
            for d in 0..self.n_in {
                z += self.w1[h * self.n_in + d] * x[d];
            }
            hidden.push(sigmoid(z));
        }
        let mut logits = Vec::with_capacity(self.n_out);
        for c in 0..self.n_out {
            let mut z = self.b2[c];
            for h in 0..self.n_hidden {
                z += self.w2[c * self.n_hidden + h] * hidden[h];
            }
            logits.push(z);
        }
        // stable softmax
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        (hidden, probs)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let (_, probs) = self.forward(x);
        argmax_low(&probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn cluster_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let t = (i as f64 - 4.5) * 0.15;
            rows.push(vec![-1.5 + t, -1.5 - t]);
            labels.push(0);
            rows.push(vec![1.5 - t, 1.5 + t]);
            labels.push(1);
        }
        (rows, labels)
    }

    #[test]
    fn fits_separable_clusters() {
        let (rows, labels) = cluster_data();
        let mut r = rng::rng_from(1, &[rng::domain::LEARNER]);
        let model = MlpModel::fit(8, 1.0, 400, &rows, &labels, 2, &mut r);
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn deterministic_given_rng_stream() {
        let (rows, labels) = cluster_data();
        let mut r1 = rng::rng_from(9, &[rng::domain::LEARNER]);
        let mut r2 = rng::rng_from(9, &[rng::domain::LEARNER]);
        let a = MlpModel::fit(6, 0.8, 100, &rows, &labels, 2, &mut r1);
        let b = MlpModel::fit(6, 0.8, 100, &rows, &labels, 2, &mut r2);
        assert_eq!(a, b);
    }
}
