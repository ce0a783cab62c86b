//! Normalized weighted vote aggregation and the thresholded decision rule.
//!
//! A region's score for class `c` is the weight-normalized sum of the base
//! learners voting `c`. The region is assigned the object class with the
//! highest score when that score strictly exceeds the decision threshold,
//! and background otherwise.

use crate::error::{Error, Result};
use crate::learners::PredictionCube;

/// Per-learner weights `w_ij`, one entry per (channel, classifier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n_fe: usize,
    n_cl: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// Build from row-major entries; every entry must lie in `[0, 1]`.
    pub fn new(n_fe: usize, n_cl: usize, w: Vec<f64>) -> Result<Self> {
        if n_fe == 0 || n_cl == 0 {
            return Err(Error::config("weight matrix needs positive dimensions"));
        }
        if w.len() != n_fe * n_cl {
            return Err(Error::config(format!(
                "weight matrix needs {} entries, got {}",
                n_fe * n_cl,
                w.len()
            )));
        }
        for (idx, &x) in w.iter().enumerate() {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(Error::config(format!(
                    "weight w_{}_{} = {x} outside [0, 1]",
                    idx / n_cl,
                    idx % n_cl
                )));
            }
        }
        Ok(WeightMatrix { n_fe, n_cl, w })
    }

    /// Uniform weights (all ones).
    pub fn uniform(n_fe: usize, n_cl: usize) -> Self {
        WeightMatrix {
            n_fe,
            n_cl,
            w: vec![1.0; n_fe * n_cl],
        }
    }

    /// Indicator matrix selecting a single base learner.
    pub fn single(n_fe: usize, n_cl: usize, i: usize, j: usize) -> Self {
        let mut w = vec![0.0; n_fe * n_cl];
        w[i * n_cl + j] = 1.0;
        WeightMatrix { n_fe, n_cl, w }
    }

    pub fn n_fe(&self) -> usize {
        self.n_fe
    }

    pub fn n_cl(&self) -> usize {
        self.n_cl
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n_cl + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// `Σ w_ij`, the Eq. 1 denominator.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Aggregated per-class scores `Out_c^k` for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores(Vec<f64>);

impl ClassScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn n_labels(&self) -> usize {
        self.0.len()
    }
}

/// Weighted-average score per class for one region.
///
/// `votes` holds the predicted label per grid cell, `(i, j)` row-major, as
/// returned by [`PredictionCube::region_votes`].
pub fn aggregate_scores(
    votes: &[u16],
    n_labels: usize,
    weights: &WeightMatrix,
) -> Result<ClassScores> {
    if votes.len() != weights.w.len() {
        return Err(Error::data(format!(
            "vote slice has {} cells but weight matrix has {}",
            votes.len(),
            weights.w.len()
        )));
    }
    let total = weights.total();
    if total <= 0.0 {
        return Err(Error::numeric("degenerate weights: weight matrix sums to zero"));
    }
    let mut scores = vec![0.0f64; n_labels];
    for (cell, &label) in votes.iter().enumerate() {
        scores[usize::from(label)] += weights.w[cell];
    }
    for s in &mut scores {
        *s /= total;
    }
    Ok(ClassScores(scores))
}

/// Map aggregated scores to a final label.
///
/// The argmax runs over object classes `1..=C` with ties toward the smaller
/// index; the winner is returned only when its score strictly exceeds `dth`,
/// background otherwise.
pub fn decide_label(scores: &ClassScores, dth: f64) -> Result<usize> {
    if !dth.is_finite() || !(0.0..=1.0).contains(&dth) {
        return Err(Error::config(format!(
            "decision threshold {dth} outside [0, 1]"
        )));
    }
    let mut best_class = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for c in 1..scores.0.len() {
        if scores.0[c] > best_score {
            best_score = scores.0[c];
            best_class = c;
        }
    }
    if best_class > 0 && best_score > dth {
        Ok(best_class)
    } else {
        Ok(0)
    }
}

fn classify_one(cube: &PredictionCube, k: usize, weights: &WeightMatrix, dth: f64) -> Result<usize> {
    let scores = aggregate_scores(cube.region_votes(k), cube.n_labels(), weights)?;
    decide_label(&scores, dth)
}

fn check_shape(cube: &PredictionCube, weights: &WeightMatrix) -> Result<()> {
    if cube.n_fe() != weights.n_fe || cube.n_cl() != weights.n_cl {
        return Err(Error::data(format!(
            "cube grid {}x{} does not match weight matrix {}x{}",
            cube.n_fe(),
            cube.n_cl(),
            weights.n_fe,
            weights.n_cl
        )));
    }
    Ok(())
}

/// Classify selected regions of a cube, preserving `indices` order.
pub fn classify_indices(
    cube: &PredictionCube,
    indices: &[usize],
    weights: &WeightMatrix,
    dth: f64,
) -> Result<Vec<usize>> {
    check_shape(cube, weights)?;
    indices
        .iter()
        .map(|&k| classify_one(cube, k, weights, dth))
        .collect()
}

/// Classify every region of the cube in region order.
pub fn classify_all(cube: &PredictionCube, weights: &WeightMatrix, dth: f64) -> Result<Vec<usize>> {
    check_shape(cube, weights)?;
    (0..cube.n_regions())
        .map(|k| classify_one(cube, k, weights, dth))
        .collect()
}

/// Region-parallel [`classify_all`]; output is identical to the sequential
/// version for any worker count.
#[cfg(feature = "parallel")]
pub fn par_classify_all(
    cube: &PredictionCube,
    weights: &WeightMatrix,
    dth: f64,
) -> Result<Vec<usize>> {
    use rayon::prelude::*;
    check_shape(cube, weights)?;
    (0..cube.n_regions())
        .into_par_iter()
        .map(|k| classify_one(cube, k, weights, dth))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_3x5(votes_per_region: Vec<Vec<u16>>, truth: Vec<usize>, n_labels: usize) -> PredictionCube {
        let n = votes_per_region.len();
        let ids = (0..n).map(|k| format!("r{k}")).collect();
        let flat = votes_per_region.into_iter().flatten().collect();
        PredictionCube::from_votes(ids, truth, flat, 3, 5, n_labels).unwrap()
    }

    #[test]
    fn single_learner_collapses_to_its_vote() {
        let w = WeightMatrix::single(3, 5, 1, 2);
        let mut votes = vec![0u16; 15];
        votes[1 * 5 + 2] = 3;
        let scores = aggregate_scores(&votes, 5, &w).unwrap();
        assert_eq!(scores.get(3), 1.0);
        assert_eq!(scores.as_slice().iter().filter(|&&s| s != 0.0).count(), 1);
    }

    #[test]
    fn uniform_weights_nine_votes_of_fifteen() {
        // 9 learners vote class 1, 6 vote class 0 -> scores 0.6 / 0.4
        let mut votes = vec![0u16; 15];
        for cell in votes.iter_mut().take(9) {
            *cell = 1;
        }
        let w = WeightMatrix::uniform(3, 5);
        let scores = aggregate_scores(&votes, 5, &w).unwrap();
        assert!((scores.get(1) - 0.6).abs() < 1e-12);
        assert!((scores.get(0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn two_learners_weighted_two_thirds_one_third() {
        // weights 0.5 and 0.25 voting class 1 and class 2
        let w = WeightMatrix::new(1, 2, vec![0.5, 0.25]).unwrap();
        let scores = aggregate_scores(&[1, 2], 5, &w).unwrap();
        assert!((scores.get(1) - 2.0 / 3.0).abs() < 1e-12);
        assert!((scores.get(2) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(scores.get(0), 0.0);
        assert_eq!(scores.get(3), 0.0);
    }

    #[test]
    fn degenerate_weights_rejected() {
        let w = WeightMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let err = aggregate_scores(&[1, 2], 3, &w).unwrap_err();
        assert!(err.to_string().contains("degenerate weights"), "{err}");
    }

    #[test]
    fn out_of_range_weight_rejected() {
        assert!(WeightMatrix::new(1, 2, vec![0.5, 1.2]).is_err());
        assert!(WeightMatrix::new(1, 2, vec![-0.1, 0.5]).is_err());
        assert!(WeightMatrix::new(1, 2, vec![f64::NAN, 0.5]).is_err());
    }

    fn scores(v: &[f64]) -> ClassScores {
        ClassScores(v.to_vec())
    }

    #[test]
    fn decide_label_direct_rule() {
        assert_eq!(decide_label(&scores(&[0.1, 0.6, 0.3, 0.0, 0.0]), 0.5).unwrap(), 1);
    }

    #[test]
    fn decide_label_fallback_to_background() {
        assert_eq!(decide_label(&scores(&[0.2, 0.4, 0.4, 0.0, 0.0]), 0.5).unwrap(), 0);
    }

    #[test]
    fn decide_label_zero_threshold() {
        // any positive object score wins at dth = 0
        assert_eq!(decide_label(&scores(&[0.9, 0.1, 0.0]), 0.0).unwrap(), 1);
        // all object scores zero -> background even at dth = 0
        assert_eq!(decide_label(&scores(&[1.0, 0.0, 0.0]), 0.0).unwrap(), 0);
    }

    #[test]
    fn decide_label_tie_breaks_low() {
        assert_eq!(decide_label(&scores(&[0.0, 0.4, 0.4, 0.2]), 0.3).unwrap(), 1);
    }

    #[test]
    fn decide_label_threshold_bounds() {
        assert!(decide_label(&scores(&[1.0, 0.0]), 1.5).is_err());
        assert!(decide_label(&scores(&[1.0, 0.0]), -0.1).is_err());
    }

    #[test]
    fn strict_inequality_at_threshold() {
        // score exactly equal to dth stays background
        assert_eq!(decide_label(&scores(&[0.5, 0.5, 0.0]), 0.5).unwrap(), 0);
    }

    #[test]
    fn unanimity_maps_through() {
        let votes: Vec<Vec<u16>> = vec![vec![2; 15], vec![0; 15]];
        let cube = cube_3x5(votes, vec![2, 0], 5);
        let labels = classify_all(&cube, &WeightMatrix::uniform(3, 5), 0.99).unwrap();
        assert_eq!(labels, vec![2, 0]);
    }

    #[test]
    fn scale_invariance_power_of_two() {
        let votes: Vec<Vec<u16>> = vec![vec![1, 2, 0, 1, 1, 3, 0, 1, 2, 2, 4, 1, 0, 3, 1]];
        let cube = cube_3x5(votes, vec![1], 5);
        let base: Vec<f64> = (0..15).map(|c| 0.03 * (c + 1) as f64).collect();
        let w1 = WeightMatrix::new(3, 5, base.clone()).unwrap();
        let w2 = WeightMatrix::new(3, 5, base.iter().map(|x| x * 2.0).collect()).unwrap();
        for dth in [0.0, 0.3, 0.5, 0.9] {
            assert_eq!(
                classify_all(&cube, &w1, dth).unwrap(),
                classify_all(&cube, &w2, dth).unwrap()
            );
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let votes: Vec<Vec<u16>> = (0..64)
            .map(|k| (0..15).map(|c| ((k * 7 + c * 3) % 5) as u16).collect())
            .collect();
        let truth = (0..64).map(|k| k % 5).collect();
        let cube = cube_3x5(votes, truth, 5);
        let w = WeightMatrix::new(3, 5, (0..15).map(|c| (c as f64) / 15.0).collect()).unwrap();
        assert_eq!(
            classify_all(&cube, &w, 0.4).unwrap(),
            par_classify_all(&cube, &w, 0.4).unwrap()
        );
    }
}
