//! K-nearest-neighbor classifier with Euclidean distance.

/// Stores the (standardized) training set; prediction scans all points.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_labels: usize,
}

impl KnnModel {
    pub fn fit(k: usize, points: Vec<Vec<f64>>, labels: Vec<usize>, n_labels: usize) -> KnnModel {
        KnnModel {
            k: k.min(points.len()).max(1),
            points,
            labels,
            n_labels,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        // Distance ties break by training index so neighbor order is stable.
        let mut dists: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, idx)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut votes = vec![0usize; self.n_labels];
        for &(_, idx) in dists.iter().take(self.k) {
            votes[self.labels[idx]] += 1;
        }
        argmax_low(&votes)
    }
}

/// Index of the maximum, ties toward the smaller index.
pub(crate) fn argmax_low<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for (idx, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = idx;
        }
    }
    best
}
