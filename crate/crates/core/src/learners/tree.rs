//! Decision tree with gain-ratio splitting on continuous features.
//!
//! Binary threshold splits, no pruning. Candidate thresholds are midpoints
//! between consecutive distinct values; following the C4.5 heuristic, only
//! candidates with at least average information gain compete on gain ratio.
//! Impure nodes keep splitting even at zero gain (both children always
//! shrink, so recursion terminates), which lets depth-2 trees shatter
//! XOR-style layouts where every single split is uninformative.

use crate::learners::knn::argmax_low;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    n_labels: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

impl<'a> Builder<'a> {
    fn label_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_labels];
        for &idx in indices {
            counts[self.labels[idx]] += 1;
        }
        counts
    }

    fn majority(&self, counts: &[usize]) -> usize {
        argmax_low(counts)
    }

    fn candidates(&self, indices: &[usize], dim: usize) -> Vec<Candidate> {
        let parent_counts = self.label_counts(indices);
        let n = indices.len();
        let parent_entropy = entropy(&parent_counts, n);
        let mut out = Vec::new();

        for feature in 0..dim {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.rows[a][feature]
                    .partial_cmp(&self.rows[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_counts = vec![0usize; self.n_labels];
            for split in 1..n {
                left_counts[self.labels[order[split - 1]]] += 1;
                let prev = self.rows[order[split - 1]][feature];
                let next = self.rows[order[split]][feature];
                if prev == next {
                    continue;
                }
                let n_left = split;
                let n_right = n - split;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let right_counts: Vec<usize> = parent_counts
                    .iter()
                    .zip(&left_counts)
                    .map(|(&p, &l)| p - l)
                    .collect();
                let frac_left = n_left as f64 / n as f64;
                let frac_right = n_right as f64 / n as f64;
                let gain = parent_entropy
                    - frac_left * entropy(&left_counts, n_left)
                    - frac_right * entropy(&right_counts, n_right);
                let split_info = -frac_left * frac_left.log2() - frac_right * frac_right.log2();
                out.push(Candidate {
                    feature,
                    threshold: prev + (next - prev) / 2.0,
                    gain,
                    ratio: gain / split_info,
                });
            }
        }
        out
    }

    fn build(&mut self, indices: &[usize], depth: usize) -> usize {
        let counts = self.label_counts(indices);
        let distinct = counts.iter().filter(|&&c| c > 0).count();
        if distinct <= 1 || depth >= self.max_depth || indices.len() < 2 * self.min_leaf {
            let node = Node::Leaf(self.majority(&counts));
            self.nodes.push(node);
            return self.nodes.len() - 1;
        }

        let dim = self.rows[indices[0]].len();
        let candidates = self.candidates(indices, dim);
        if candidates.is_empty() {
            let node = Node::Leaf(self.majority(&counts));
            self.nodes.push(node);
            return self.nodes.len() - 1;
        }

        let mean_gain: f64 =
            candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
        let mut best: Option<&Candidate> = None;
        for cand in &candidates {
            if cand.gain + 1e-12 < mean_gain {
                continue;
            }
            // Features and thresholds are enumerated ascending, so keeping
            // the first maximum breaks ties toward the smaller pair.
            match best {
                None => best = Some(cand),
                Some(b) if cand.ratio > b.ratio => best = Some(cand),
                _ => {}
            }
        }
        let best = best.expect("at least one candidate has gain >= mean gain");

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&idx| self.rows[idx][best.feature] <= best.threshold);
        let feature = best.feature;
        let threshold = best.threshold;
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left,
            right,
        });
        self.nodes.len() - 1
    }
}

impl TreeModel {
    pub fn fit(
        max_depth: usize,
        min_leaf: usize,
        rows: &[Vec<f64>],
        labels: &[usize],
        n_labels: usize,
    ) -> TreeModel {
        let mut builder = Builder {
            rows,
            labels,
            n_labels,
            max_depth,
            min_leaf: min_leaf.max(1),
            nodes: Vec::new(),
        };
        let indices: Vec<usize> = (0..rows.len()).collect();
        builder.build(&indices, 0);
        TreeModel {
            nodes: builder.nodes,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = self.nodes.len() - 1; // root is pushed last
        loop {
            match &self.nodes[node] {
                Node::Leaf(label) => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![0, 1, 1, 0],
        )
    }

    /// Brute-force proof that depth-2 axis splits shatter XOR: a root split
    /// on either feature yields children whose remaining feature separates
    /// the labels perfectly.
    #[test]
    fn depth_two_axis_splits_shatter_xor() {
        let (rows, labels) = xor_data();
        let mut shattered = false;
        for root_feature in 0..2 {
            let (left, right): (Vec<usize>, Vec<usize>) =
                (0..4).partition(|&k| rows[k][root_feature] <= 0.5);
            let pure_after = |side: &[usize]| {
                let other = 1 - root_feature;
                let lo: Vec<usize> = side
                    .iter()
                    .filter(|&&k| rows[k][other] <= 0.5)
                    .map(|&k| labels[k])
                    .collect();
                let hi: Vec<usize> = side
                    .iter()
                    .filter(|&&k| rows[k][other] > 0.5)
                    .map(|&k| labels[k])
                    .collect();
                lo.windows(2).all(|w| w[0] == w[1]) && hi.windows(2).all(|w| w[0] == w[1])
            };
            if pure_after(&left) && pure_after(&right) {
                shattered = true;
            }
        }
        assert!(shattered);
    }

    #[test]
    fn xor_training_accuracy_is_one_at_depth_two() {
        let (rows, labels) = xor_data();
        let model = TreeModel::fit(2, 1, &rows, &labels, 2);
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![1, 1, 1];
        let model = TreeModel::fit(5, 1, &rows, &labels, 2);
        assert_eq!(model.nodes.len(), 1);
        assert_eq!(model.predict(&[7.0]), 1);
    }

    #[test]
    fn respects_max_depth() {
        // depth 1 cannot represent XOR
        let (rows, labels) = xor_data();
        let model = TreeModel::fit(1, 1, &rows, &labels, 2);
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(row, &l)| model.predict(row) == l)
            .count();
        assert!(correct < 4);
    }

    #[test]
    fn gain_ratio_prefers_clean_feature() {
        // feature 0 separates perfectly, feature 1 is constant noise
        let rows = vec![
            vec![0.0, 5.0],
            vec![0.1, 5.0],
            vec![0.9, 5.0],
            vec![1.0, 5.0],
        ];
        let labels = vec![0, 0, 1, 1];
        let model = TreeModel::fit(3, 1, &rows, &labels, 2);
        match model.nodes.last().unwrap() {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            Node::Leaf(_) => panic!("expected a split at the root"),
        }
        assert_eq!(model.predict(&[0.05, 5.0]), 0);
        assert_eq!(model.predict(&[0.95, 5.0]), 1);
    }
}
