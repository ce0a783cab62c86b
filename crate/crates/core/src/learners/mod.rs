//! The base-learner grid: five classifier families trained per feature
//! channel, emitting one-hot votes into a prediction cube.
//!
//! Classifier index order is fixed: KNN, linear SVM, MLP, C4.5-style tree,
//! Gaussian NB. Distance- and gradient-based kinds (KNN, SVM, MLP) see
//! z-scored features; trees and NB consume raw features. All score ties
//! break toward the smaller class index.

mod cube;
mod knn;
mod mlp;
mod nb;
mod scaler;
mod svm;
mod tree;

pub use cube::PredictionCube;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use knn::KnnModel;
use mlp::MlpModel;
use nb::NbModel;
use scaler::Scaler;
use svm::SvmModel;
use tree::TreeModel;

/// Number of classifier families in the grid.
pub const N_CLASSIFIERS: usize = 5;

/// One classifier family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerKind {
    Knn {
        k: usize,
    },
    LinearSvm {
        lambda: f64,
        epochs: usize,
    },
    Mlp {
        hidden: usize,
        learning_rate: f64,
        epochs: usize,
    },
    DecisionTreeC45 {
        max_depth: usize,
        min_leaf: usize,
    },
    GaussianNb {
        var_floor: f64,
    },
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Knn { .. } => "knn",
            LearnerKind::LinearSvm { .. } => "linear_svm",
            LearnerKind::Mlp { .. } => "mlp",
            LearnerKind::DecisionTreeC45 { .. } => "decision_tree_c45",
            LearnerKind::GaussianNb { .. } => "gaussian_nb",
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::config(format!("{}: {msg}", self.name())));
        match *self {
            LearnerKind::Knn { k } => {
                if k == 0 {
                    return fail("k must be >= 1");
                }
            }
            LearnerKind::LinearSvm { lambda, epochs } => {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return fail("lambda must be positive");
                }
                if epochs == 0 {
                    return fail("epochs must be >= 1");
                }
            }
            LearnerKind::Mlp {
                hidden,
                learning_rate,
                epochs,
            } => {
                if hidden == 0 {
                    return fail("hidden width must be >= 1");
                }
                if !(learning_rate > 0.0) || !learning_rate.is_finite() {
                    return fail("learning rate must be positive");
                }
                if epochs == 0 {
                    return fail("epochs must be >= 1");
                }
            }
            LearnerKind::DecisionTreeC45 {
                max_depth,
                min_leaf,
            } => {
                if max_depth == 0 {
                    return fail("max depth must be >= 1");
                }
                if min_leaf == 0 {
                    return fail("min samples per leaf must be >= 1");
                }
            }
            LearnerKind::GaussianNb { var_floor } => {
                if !(var_floor > 0.0) || !var_floor.is_finite() {
                    return fail("variance floor must be positive");
                }
            }
        }
        Ok(())
    }

    fn needs_scaling(&self) -> bool {
        matches!(
            self,
            LearnerKind::Knn { .. } | LearnerKind::LinearSvm { .. } | LearnerKind::Mlp { .. }
        )
    }
}

/// Hyperparameters for all five families; `kinds()` yields them in grid
/// column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub knn_k: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub mlp_hidden: usize,
    pub mlp_learning_rate: f64,
    pub mlp_epochs: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub nb_var_floor: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            knn_k: 5,
            svm_lambda: 1e-3,
            svm_epochs: 200,
            mlp_hidden: 16,
            mlp_learning_rate: 1.0,
            mlp_epochs: 300,
            tree_max_depth: 10,
            tree_min_leaf: 1,
            nb_var_floor: 1e-9,
        }
    }
}

impl LearnerConfig {
    /// The five classifier families, in fixed column order.
    pub fn kinds(&self) -> Vec<LearnerKind> {
        vec![
            LearnerKind::Knn { k: self.knn_k },
            LearnerKind::LinearSvm {
                lambda: self.svm_lambda,
                epochs: self.svm_epochs,
            },
            LearnerKind::Mlp {
                hidden: self.mlp_hidden,
                learning_rate: self.mlp_learning_rate,
                epochs: self.mlp_epochs,
            },
            LearnerKind::DecisionTreeC45 {
                max_depth: self.tree_max_depth,
                min_leaf: self.tree_min_leaf,
            },
            LearnerKind::GaussianNb {
                var_floor: self.nb_var_floor,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Knn(KnnModel),
    Svm(SvmModel),
    Mlp(MlpModel),
    Tree(TreeModel),
    Nb(NbModel),
}

/// A fitted classifier for one (channel, classifier) grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLearner {
    kind: LearnerKind,
    channel: usize,
    classifier: usize,
    class_count: usize,
    input_dim: usize,
    scaler: Option<Scaler>,
    model: Model,
}

/// Fit one base learner on a channel's feature rows.
///
/// `class_count` is the number of object classes `C`; labels range over
/// `0..=C`. Training is deterministic for a given seed.
pub fn train_base_learner(
    kind: &LearnerKind,
    rows: &[&[f64]],
    labels: &[usize],
    class_count: usize,
    seed: u64,
) -> Result<TrainedLearner> {
    kind.validate()?;
    if rows.is_empty() || labels.is_empty() {
        return Err(Error::data("empty training data"));
    }
    if rows.len() != labels.len() {
        return Err(Error::data("feature / label length mismatch"));
    }
    let input_dim = rows[0].len();
    for (row_idx, row) in rows.iter().enumerate() {
        if row.len() != input_dim {
            return Err(Error::data(format!(
                "row {row_idx}: inconsistent feature dimensionality"
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::data(format!("row {row_idx}: non-finite feature")));
        }
    }
    let n_labels = class_count + 1;
    for (row_idx, &label) in labels.iter().enumerate() {
        if label > class_count {
            return Err(Error::data(format!(
                "row {row_idx}: label {label} outside 0..{class_count}"
            )));
        }
    }
    {
        let first = labels[0];
        if labels.iter().all(|&l| l == first) {
            return Err(Error::data(
                "single-class training data: need at least two distinct labels",
            ));
        }
    }

    let scaler = kind.needs_scaling().then(|| Scaler::fit(rows));
    let owned: Vec<Vec<f64>> = match &scaler {
        Some(s) => s.transform_rows(rows),
        None => rows.iter().map(|r| r.to_vec()).collect(),
    };

    let model = match *kind {
        LearnerKind::Knn { k } => Model::Knn(KnnModel::fit(k, owned, labels.to_vec(), n_labels)),
        LearnerKind::LinearSvm { lambda, epochs } => {
            Model::Svm(SvmModel::fit(lambda, epochs, &owned, labels, n_labels))
        }
        LearnerKind::Mlp {
            hidden,
            learning_rate,
            epochs,
        } => {
            let mut rng = rng::rng_from(seed, &[domain::LEARNER]);
            Model::Mlp(MlpModel::fit(
                hidden,
                learning_rate,
                epochs,
                &owned,
                labels,
                n_labels,
                &mut rng,
            ))
        }
        LearnerKind::DecisionTreeC45 {
            max_depth,
            min_leaf,
        } => Model::Tree(TreeModel::fit(max_depth, min_leaf, &owned, labels, n_labels)),
        LearnerKind::GaussianNb { var_floor } => {
            Model::Nb(NbModel::fit(var_floor, &owned, labels, n_labels))
        }
    };

    Ok(TrainedLearner {
        kind: kind.clone(),
        channel: 0,
        classifier: 0,
        class_count,
        input_dim,
        scaler,
        model,
    })
}

impl TrainedLearner {
    /// Set the learner's grid position.
    pub fn at(mut self, channel: usize, classifier: usize) -> Self {
        self.channel = channel;
        self.classifier = classifier;
        self
    }

    pub fn kind(&self) -> &LearnerKind {
        &self.kind
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn classifier(&self) -> usize {
        self.classifier
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Predict a label in `0..=C` for one feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.input_dim {
            return Err(Error::data(format!(
                "feature vector has {} dimensions, learner expects {}",
                features.len(),
                self.input_dim
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("non-finite feature value"));
        }
        let x;
        let x = match &self.scaler {
            Some(s) => {
                x = s.transform(features);
                &x[..]
            }
            None => features,
        };
        Ok(match &self.model {
            Model::Knn(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
            Model::Mlp(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
            Model::Nb(m) => m.predict(x),
        })
    }

    /// One-hot vote over labels `0..=C`.
    pub fn predict_one_hot(&self, features: &[f64]) -> Result<Vec<u8>> {
        let label = self.predict(features)?;
        let mut v = vec![0u8; self.class_count + 1];
        v[label] = 1;
        Ok(v)
    }
}

/// The complete `N_FE x N_CL` grid of trained base learners.
#[derive(Debug, Clone)]
pub struct LearnerGrid {
    learners: Vec<TrainedLearner>,
    n_fe: usize,
    n_cl: usize,
}

impl LearnerGrid {
    /// Assemble a grid, requiring exactly one learner per cell.
    pub fn new(mut learners: Vec<TrainedLearner>, n_fe: usize, n_cl: usize) -> Result<Self> {
        let mut slots: Vec<Option<usize>> = vec![None; n_fe * n_cl];
        for (idx, learner) in learners.iter().enumerate() {
            if learner.channel >= n_fe || learner.classifier >= n_cl {
                return Err(Error::data(format!(
                    "learner at ({}, {}) outside the {n_fe}x{n_cl} grid",
                    learner.channel, learner.classifier
                )));
            }
            let slot = learner.channel * n_cl + learner.classifier;
            if slots[slot].is_some() {
                return Err(Error::data(format!(
                    "duplicate learner for grid cell ({}, {})",
                    learner.channel, learner.classifier
                )));
            }
            slots[slot] = Some(idx);
        }
        for (slot, filled) in slots.iter().enumerate() {
            if filled.is_none() {
                return Err(Error::data(format!(
                    "missing grid cell ({}, {})",
                    slot / n_cl,
                    slot % n_cl
                )));
            }
        }
        // Store in row-major cell order.
        learners.sort_by_key(|l| l.channel * n_cl + l.classifier);
        Ok(LearnerGrid {
            learners,
            n_fe,
            n_cl,
        })
    }

    pub fn n_fe(&self) -> usize {
        self.n_fe
    }

    pub fn n_cl(&self) -> usize {
        self.n_cl
    }

    pub fn get(&self, i: usize, j: usize) -> &TrainedLearner {
        &self.learners[i * self.n_cl + j]
    }

    pub fn learners(&self) -> &[TrainedLearner] {
        &self.learners
    }
}

fn grid_cells(dataset: &Dataset, config: &LearnerConfig) -> Vec<(usize, usize, LearnerKind)> {
    let kinds = config.kinds();
    let mut cells = Vec::with_capacity(dataset.n_channels() * kinds.len());
    for i in 0..dataset.n_channels() {
        for (j, kind) in kinds.iter().enumerate() {
            cells.push((i, j, kind.clone()));
        }
    }
    cells
}

fn train_cell(
    dataset: &Dataset,
    i: usize,
    j: usize,
    kind: &LearnerKind,
    master_seed: u64,
) -> Result<TrainedLearner> {
    let rows = dataset.channel_rows(i);
    let labels = dataset.labels();
    let seed = rng::derive_seed(master_seed, &[domain::LEARNER, i as u64, j as u64]);
    Ok(train_base_learner(kind, &rows, &labels, dataset.class_count(), seed)?.at(i, j))
}

/// Train the full grid sequentially.
pub fn train_grid(dataset: &Dataset, config: &LearnerConfig, master_seed: u64) -> Result<LearnerGrid> {
    let cells = grid_cells(dataset, config);
    let learners: Vec<TrainedLearner> = cells
        .iter()
        .map(|(i, j, kind)| train_cell(dataset, *i, *j, kind, master_seed))
        .collect::<Result<_>>()?;
    LearnerGrid::new(learners, dataset.n_channels(), config.kinds().len())
}

/// Train the grid cells in parallel; per-cell seeds are derived from the
/// master seed, so the result matches [`train_grid`] exactly.
#[cfg(feature = "parallel")]
pub fn par_train_grid(
    dataset: &Dataset,
    config: &LearnerConfig,
    master_seed: u64,
) -> Result<LearnerGrid> {
    use rayon::prelude::*;
    let cells = grid_cells(dataset, config);
    let learners: Vec<TrainedLearner> = cells
        .par_iter()
        .map(|(i, j, kind)| train_cell(dataset, *i, *j, kind, master_seed))
        .collect::<Result<_>>()?;
    LearnerGrid::new(learners, dataset.n_channels(), config.kinds().len())
}

fn check_grid_against(dataset: &Dataset, grid: &LearnerGrid) -> Result<()> {
    if grid.n_fe != dataset.n_channels() {
        return Err(Error::data(format!(
            "grid has {} channels, dataset has {}",
            grid.n_fe,
            dataset.n_channels()
        )));
    }
    for learner in &grid.learners {
        let expect = dataset.channel_dims()[learner.channel];
        if learner.input_dim != expect {
            return Err(Error::data(format!(
                "learner ({}, {}) expects {} features, channel {} provides {}",
                learner.channel, learner.classifier, learner.input_dim, learner.channel, expect
            )));
        }
    }
    Ok(())
}

fn region_votes(dataset: &Dataset, grid: &LearnerGrid, k: usize) -> Result<Vec<u16>> {
    let region = &dataset.regions()[k];
    let mut votes = Vec::with_capacity(grid.learners.len());
    for learner in &grid.learners {
        let label = learner.predict(&region.features[learner.channel])?;
        votes.push(label as u16);
    }
    Ok(votes)
}

/// Run every learner on every region and collect the one-hot vote cube.
pub fn build_prediction_cube(grid: &LearnerGrid, dataset: &Dataset) -> Result<PredictionCube> {
    check_grid_against(dataset, grid)?;
    let mut predicted = Vec::with_capacity(dataset.len() * grid.learners.len());
    for k in 0..dataset.len() {
        predicted.extend(region_votes(dataset, grid, k)?);
    }
    PredictionCube::from_votes(
        dataset.region_ids(),
        dataset.labels(),
        predicted,
        grid.n_fe,
        grid.n_cl,
        dataset.class_count() + 1,
    )
}

/// Region-parallel [`build_prediction_cube`] with identical output.
#[cfg(feature = "parallel")]
pub fn par_build_prediction_cube(grid: &LearnerGrid, dataset: &Dataset) -> Result<PredictionCube> {
    use rayon::prelude::*;
    check_grid_against(dataset, grid)?;
    let per_region: Vec<Vec<u16>> = (0..dataset.len())
        .into_par_iter()
        .map(|k| region_votes(dataset, grid, k))
        .collect::<Result<_>>()?;
    PredictionCube::from_votes(
        dataset.region_ids(),
        dataset.labels(),
        per_region.into_iter().flatten().collect(),
        grid.n_fe,
        grid.n_cl,
        dataset.class_count() + 1,
    )
}
