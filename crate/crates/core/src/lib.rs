//! Weighted-vote ensemble over a grid of per-channel base learners, with the
//! ensemble weights and decision threshold tuned by whale optimization
//! against a cross-validated accuracy/precision/recall objective.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`dataset`]: labeled multi-channel regions, hold-out split, stratified
//!   K-fold planning.
//! - [`learners`]: the five classifier families, grid training and the
//!   one-hot prediction cube.
//! - [`ensemble`]: normalized weighted vote aggregation and the thresholded
//!   decision rule.
//! - [`metrics`]: confusion-matrix statistics and the scalar fitness.
//! - [`woa`]: the whale optimizer over the weight-matrix + threshold box.
//! - [`pipeline`]: end-to-end orchestration and report/trace output.
//!
//! With the default `parallel` feature, grid training, cube construction and
//! population evaluation offer `par_*` variants backed by rayon; results are
//! bit-identical to the sequential paths for any worker count.

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod learners;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
